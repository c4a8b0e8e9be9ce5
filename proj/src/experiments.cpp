#include "rfhgn/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rfhgn {

SystemSpec SystemConfig::build() const {
    SystemSpec spec;
    switch (kind) {
        case SystemKind::chain: spec = SystemSpec::chain(n, dim); break;
        case SystemKind::lattice: spec = SystemSpec::lattice(nx, ny, dim); break;
        case SystemKind::ring: spec = SystemSpec::ring(n, dim, rest_length); break;
    }
    spec.placement = placement;
    return spec;
}

SystemSpec SystemConfig::build_with_size(int size) const {
    SystemConfig c = *this;
    if (kind == SystemKind::lattice) {
        c.nx = size;
        c.ny = size;
    } else {
        c.n = size;
    }
    return c.build();
}

void RunConfig::validate() const {
    if (dims.dim != system.dim) throw std::invalid_argument("model dim must equal system dim");
    if (dims.d_h < 1 || dims.d_m < 1) throw std::invalid_argument("d_h and d_M must be >= 1 (d_L = d_h + d_M)");
    if (data.count < 2) throw std::invalid_argument("data.count must be >= 2");
    if (n_seeds < 1) throw std::invalid_argument("n_seeds must be >= 1");
    if (!(integration.dt > 0.0)) throw std::invalid_argument("integration.dt must be positive");
    sampler.validate();
    (void)system.build();
}

RunConfig preset_config(const std::string& name) {
    RunConfig cfg;
    cfg.name = name;
    if (name == "chain8") {
        cfg.system = {SystemKind::chain, 8, 0, 0, 2, 0.0, Placement::rest};
        cfg.data = {4000, 0.5, {-1.0, 1.0}, {-1.0, 1.0}};
        cfg.dims = ModelDims::from_readout(2, 64, 512);
    } else if (name == "lattice3x3") {
        cfg.system = {SystemKind::lattice, 9, 3, 3, 3, 0.0, Placement::rest};
        cfg.data = {2000, 0.5, {-0.5, 0.5}, {-0.5, 0.5}};
        cfg.dims = ModelDims::from_readout(3, 48, 384);
        cfg.zero_shot.train_sizes = {3};
        cfg.zero_shot.test_sizes = {3, 10};
    } else if (name == "ring") {
        cfg.system = {SystemKind::ring, 5, 0, 0, 2, 1.0, Placement::rest};
        cfg.data = {2000, 0.5, {-0.5, 0.5}, {-0.5, 0.5}};
        cfg.dims = ModelDims::from_readout(2, 64, 512);
        cfg.zero_shot.train_sizes = {5};
        cfg.zero_shot.test_sizes = {5, 16, 64};
    } else {
        throw std::invalid_argument("unknown preset: " + name);
    }
    return cfg;
}

bool is_preset(const std::string& name) {
    return name == "chain8" || name == "lattice3x3" || name == "ring";
}

SeedStreams streams_for(std::uint64_t seed) {
    return {derive_seed(seed, 0), derive_seed(seed, 1)};
}

double median(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const auto mid = values.size() / 2;
    return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

TrainedRun train_from_config(const RunConfig& cfg, std::uint64_t seed) {
    const auto streams = streams_for(seed);
    Rng data_rng(streams.data_seed);
    Rng model_rng(streams.model_seed);
    const auto spec = cfg.system.build();
    TrainedRun run;
    run.data = generate_dataset(spec, cfg.data.count, cfg.data.disp, cfg.data.mom, cfg.data.train_fraction, data_rng);
    run.trained = train(run.data.train, cfg.dims, cfg.sampler, cfg.solver, model_rng, cfg.invariance);
    return run;
}

AccuracyResult run_accuracy(const RunConfig& cfg) {
    cfg.validate();
    AccuracyResult out;
    std::vector<double> mses;
    for (int s = 0; s < cfg.n_seeds; ++s) {
        const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(s);
        auto run = train_from_config(cfg, seed);
        SeedRun r;
        r.seed = seed;
        r.report = run.trained.report;
        r.test = evaluate_dynamics(run.trained.params, run.data.test, cfg.solver.policy);
        mses.push_back(r.test.mse);
        out.runs.push_back(std::move(r));
    }
    out.median_mse = median(mses);
    out.min_mse = *std::min_element(mses.begin(), mses.end());
    out.max_mse = *std::max_element(mses.begin(), mses.end());
    return out;
}

std::vector<ZeroShotRow> run_zero_shot(const RunConfig& cfg) {
    cfg.validate();
    std::vector<SystemSpec> test_specs;
    for (int size : cfg.zero_shot.test_sizes) {
        auto spec = cfg.system.build_with_size(size);
        if (spec.topology.n_nodes() > cfg.zero_shot.max_nodes) {
            throw std::invalid_argument("zero-shot test size " + std::to_string(size) + " has " +
                                        std::to_string(spec.topology.n_nodes()) + " nodes, above the cap of " +
                                        std::to_string(cfg.zero_shot.max_nodes));
        }
        test_specs.push_back(std::move(spec));
    }
    std::vector<ZeroShotRow> rows;
    const auto streams = streams_for(cfg.seed);
    for (int train_size : cfg.zero_shot.train_sizes) {
        const auto train_spec = cfg.system.build_with_size(train_size);
        Rng data_rng(streams.data_seed);
        const auto data =
            generate_dataset(train_spec, cfg.data.count, cfg.data.disp, cfg.data.mom, cfg.data.train_fraction, data_rng);
        for (auto method : cfg.zero_shot.methods) {
            SamplerConfig sampler = cfg.sampler;
            sampler.method = method;
            Rng model_rng(streams.model_seed);
            const auto trained = train(data.train, cfg.dims, sampler, cfg.solver, model_rng, cfg.invariance);
            for (std::size_t t = 0; t < test_specs.size(); ++t) {
                // Same test data for every method and train size.
                Rng test_rng(derive_seed(cfg.seed, 100 + t));
                const auto test =
                    generate_samples(test_specs[t], cfg.zero_shot.test_count, cfg.data.disp, cfg.data.mom, test_rng);
                const auto eval = evaluate_dynamics(trained.params, test, cfg.solver.policy);
                rows.push_back({to_string(method), train_size, cfg.zero_shot.test_sizes[t],
                                test_specs[t].topology.n_nodes(), eval.relative_error, eval.mse, eval.eval_seconds});
            }
        }
    }
    return rows;
}

RolloutComparison compare_rollouts(const SystemSpec& spec, const HamiltonianModel& model, const PhaseState& y0,
                                   const IntegrationConfig& integ) {
    const AnalyticHamiltonian truth(spec);
    const auto true_traj = stormer_verlet_rollout(truth, y0, integ.dt, integ.steps, integ.options);
    RolloutComparison out;
    Trajectory model_traj;
    try {
        model_traj = stormer_verlet_rollout(model, y0, integ.dt, integ.steps, integ.options);
    } catch (const IntegrationError& e) {
        out.diverged = true;
        out.diverged_step = e.step();
        out.failure = e.what();
        if (e.partial() != nullptr) model_traj = *e.partial();
    }
    out.h0 = hamiltonian(spec, y0);
    const double scale = std::abs(out.h0) > 0.0 ? std::abs(out.h0) : 1.0;
    const auto n = true_traj.states.size();
    const auto n_model = model_traj.states.size();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.time.resize(n);
    out.h_true = true_traj.energies;
    out.h_model.assign(n, nan);
    out.state_mse.assign(n, nan);
    for (std::size_t k = 0; k < n; ++k) {
        out.time[k] = static_cast<double>(k) * integ.dt;
        out.max_true_drift = std::max(out.max_true_drift, std::abs(out.h_true[k] - out.h0) / scale);
        if (k >= n_model) continue;
        out.h_model[k] = model_traj.energies[k];
        out.state_mse[k] = mse(model_traj.states[k].flat(), true_traj.states[k].flat());
        out.max_model_drift = std::max(out.max_model_drift, std::abs(out.h_model[k] - out.h0) / scale);
    }
    if (out.diverged) {
        out.max_model_drift = std::numeric_limits<double>::infinity();
        out.final_state_mse = std::numeric_limits<double>::infinity();
    } else {
        out.final_state_mse = out.state_mse.back();
    }
    return out;
}

PhaseState rollout_initial_state(const RunConfig& cfg, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 2));
    return generate_samples(cfg.system.build(), 1, cfg.data.disp, cfg.data.mom, rng).samples.front().state;
}

RolloutComparison run_rollout_eval(const RunConfig& cfg, const ModelParams& params) {
    cfg.validate();
    const auto spec = cfg.system.build();
    const LearnedHamiltonian model(params, spec.topology);
    return compare_rollouts(spec, model, rollout_initial_state(cfg, cfg.seed), cfg.integration);
}

RolloutComparison run_rollout_eval(const RunConfig& cfg) {
    const auto run = train_from_config(cfg, cfg.seed);
    return run_rollout_eval(cfg, run.trained.params);
}

std::vector<AblationCell> run_ablation(const RunConfig& cfg) {
    cfg.validate();
    const auto streams = streams_for(cfg.seed);
    Rng data_rng(streams.data_seed);
    const auto spec = cfg.system.build();
    const auto data =
        generate_dataset(spec, cfg.data.count, cfg.data.disp, cfg.data.mom, cfg.data.train_fraction, data_rng);
    std::vector<AblationCell> cells;
    for (int width : cfg.ablation.widths) {
        for (int d_h : cfg.ablation.d_h) {
            AblationCell cell;
            cell.d_h = d_h;
            cell.width = width;
            cell.d_m = cfg.ablation.axis == AblationAxis::message ? width : width - d_h;
            cell.d_l = d_h + cell.d_m;
            if (cell.d_m < 1) {
                cell.skipped = true;
                cell.note = "d_M = d_L - d_h < 1";
                cells.push_back(cell);
                continue;
            }
            Rng model_rng(streams.model_seed);
            const auto trained = train(data.train, ModelDims{spec.topology.dim(), d_h, cell.d_m}, cfg.sampler,
                                       cfg.solver, model_rng, cfg.invariance);
            cell.test_mse = evaluate_dynamics(trained.params, data.test, cfg.solver.policy).mse;
            cells.push_back(cell);
        }
    }
    return cells;
}

}  // namespace rfhgn
