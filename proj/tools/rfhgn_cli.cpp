// Command-line driver: data generation, training, evaluation, rollouts,
// zero-shot tables and ablation grids.

#include "rfhgn/experiments.hpp"
#include "rfhgn/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rfhgn;

namespace {

struct Common {
    std::string config = "chain8";
    std::optional<std::uint64_t> seed;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "Preset name (chain8, lattice3x3, ring) or config file")
        ->capture_default_str();
    cmd->add_option("--seed", c.seed, "Base seed (overrides the config)");
    cmd->add_option("--out", c.out, "Output directory (default: $RFHGN_OUT_DIR or ./rfhgn_out)");
}

fs::path out_dir(const Common& c) {
    if (!c.out.empty()) return c.out;
    if (const char* env = std::getenv("RFHGN_OUT_DIR"); env && *env) return env;
    return "rfhgn_out";
}

RunConfig resolve(const Common& c) {
    RunConfig cfg = load_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    return cfg;
}

json header(const char* command, const RunConfig& cfg) {
    return {{"schema_version", 1}, {"command", command}, {"config", cfg.name}, {"seed", cfg.seed}};
}

json report_json(const TrainReport& r) {
    return {{"train_mse", r.train_mse},
            {"residual_norm", r.residual_norm},
            {"effective_rank", r.effective_rank},
            {"zero_matrix", r.zero_matrix}};
}

json timing_json(const TrainReport& r) {
    return {{"wall_time_seconds", r.wall_time_seconds},
            {"sampling_seconds", r.sampling_seconds},
            {"assembly_seconds", r.assembly_seconds},
            {"solve_seconds", r.solve_seconds}};
}

json eval_json(const DynamicsEval& e) {
    return {{"mse", e.mse}, {"relative_error", e.relative_error}, {"samples", e.samples}};
}

// Metrics depend only on (config, seed); wall times go to a separate file.
void write_outputs(const fs::path& dir, const json& metrics, const json& timings) {
    fs::create_directories(dir);
    write_text_file(dir / "metrics.json", metrics.dump(2) + "\n");
    write_text_file(dir / "timings.json", timings.dump(2) + "\n");
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int cmd_gen_data(const Common& c) {
    const auto cfg = resolve(c);
    const auto streams = streams_for(cfg.seed);
    Rng rng(streams.data_seed);
    const auto data = generate_dataset(cfg.system.build(), cfg.data.count, cfg.data.disp, cfg.data.mom,
                                       cfg.data.train_fraction, rng);
    const auto dir = out_dir(c);
    write_dataset_dir(cfg.system, data, dir);
    write_text_file(dir / "config.json", config_to_string(cfg));
    std::cout << "wrote " << data.train.samples.size() << " train and " << data.test.samples.size()
              << " test samples to " << dir.string() << "\n";
    return 0;
}

int cmd_train(const Common& c, const std::string& data_dir) {
    auto cfg = resolve(c);
    GeneratedData data;
    if (!data_dir.empty()) {
        auto stored = read_dataset_dir(data_dir);
        cfg.system = stored.system;
        cfg.dims.dim = stored.system.dim;
        cfg.validate();
        data = std::move(stored.data);
    } else {
        Rng rng(streams_for(cfg.seed).data_seed);
        data = generate_dataset(cfg.system.build(), cfg.data.count, cfg.data.disp, cfg.data.mom,
                                cfg.data.train_fraction, rng);
    }
    Rng model_rng(streams_for(cfg.seed).model_seed);
    const auto trained = train(data.train, cfg.dims, cfg.sampler, cfg.solver, model_rng, cfg.invariance);
    const auto test = evaluate_dynamics(trained.params, data.test, cfg.solver.policy);

    const auto dir = out_dir(c);
    json metrics = header("train", cfg);
    metrics["train"] = report_json(trained.report);
    metrics["train"]["samples"] = data.train.samples.size();
    metrics["test"] = eval_json(test);
    json timings = timing_json(trained.report);
    timings["eval_seconds"] = test.eval_seconds;
    write_outputs(dir, metrics, timings);
    save_model(trained.params, dir / "model.json");
    write_text_file(dir / "config.json", config_to_string(cfg));
    std::cout << "test mse " << test.mse << ", relative error " << test.relative_error << "\n";
    return 0;
}

int cmd_eval(const Common& c, const std::string& model_path, const std::string& data_dir,
             std::optional<int> n_seeds) {
    auto cfg = resolve(c);
    if (n_seeds) cfg.n_seeds = *n_seeds;
    const auto dir = out_dir(c);
    json metrics = header("eval", cfg);
    json timings = json::object();
    if (!model_path.empty()) {
        // Evaluate a saved model; data comes from --data or is generated from the config.
        const auto params = load_model(model_path);
        GeneratedData data;
        if (!data_dir.empty()) {
            data = read_dataset_dir(data_dir).data;
        } else {
            Rng rng(streams_for(cfg.seed).data_seed);
            data = generate_dataset(cfg.system.build(), cfg.data.count, cfg.data.disp, cfg.data.mom,
                                    cfg.data.train_fraction, rng);
        }
        const auto test = evaluate_dynamics(params, data.test, cfg.solver.policy);
        metrics["test"] = eval_json(test);
        timings["eval_seconds"] = test.eval_seconds;
        std::cout << "test mse " << test.mse << "\n";
    } else {
        const auto acc = run_accuracy(cfg);
        json runs = json::array();
        json run_times = json::array();
        for (const auto& r : acc.runs) {
            runs.push_back({{"seed", r.seed}, {"train", report_json(r.report)}, {"test", eval_json(r.test)}});
            json t = timing_json(r.report);
            t["seed"] = r.seed;
            t["eval_seconds"] = r.test.eval_seconds;
            run_times.push_back(t);
        }
        metrics["n_seeds"] = cfg.n_seeds;
        metrics["runs"] = runs;
        metrics["test_mse"] = {{"median", acc.median_mse}, {"min", acc.min_mse}, {"max", acc.max_mse}};
        timings["runs"] = run_times;
        std::cout << "median test mse " << acc.median_mse << " (" << acc.min_mse << ", " << acc.max_mse << ") over "
                  << cfg.n_seeds << " seeds\n";
    }
    write_outputs(dir, metrics, timings);
    return 0;
}

int cmd_rollout(const Common& c, const std::string& model_path, std::optional<std::size_t> steps) {
    auto cfg = resolve(c);
    if (steps) cfg.integration.steps = *steps;
    const auto r = model_path.empty() ? run_rollout_eval(cfg) : run_rollout_eval(cfg, load_model(model_path));
    const auto dir = out_dir(c);
    json metrics = header("rollout", cfg);
    metrics["dt"] = cfg.integration.dt;
    metrics["steps"] = cfg.integration.steps;
    metrics["h0"] = r.h0;
    metrics["max_model_drift"] = r.max_model_drift;
    metrics["max_true_drift"] = r.max_true_drift;
    metrics["final_state_mse"] = r.final_state_mse;
    metrics["diverged"] = r.diverged;
    if (r.diverged) {
        metrics["diverged_step"] = r.diverged_step;
        metrics["failure"] = r.failure;
    }
    write_outputs(dir, metrics, json::object());
    std::string csv = "t,h_true,h_model,state_mse\n";
    for (std::size_t k = 0; k < r.time.size(); ++k)
        csv += fmt(r.time[k]) + "," + fmt(r.h_true[k]) + "," + fmt(r.h_model[k]) + "," + fmt(r.state_mse[k]) + "\n";
    write_text_file(dir / "rollout.csv", csv);
    if (r.diverged) std::cout << "model rollout diverged: " << r.failure << "\n";
    std::cout << "max relative energy drift: model " << r.max_model_drift << ", true " << r.max_true_drift << "\n";
    return 0;
}

int cmd_zero_shot(const Common& c) {
    const auto cfg = resolve(c);
    const auto rows = run_zero_shot(cfg);
    const auto dir = out_dir(c);
    json metrics = header("zero-shot", cfg);
    json table = json::array();
    json times = json::array();
    std::string csv = "method,train_n,test_n,test_nodes,relative_error,mse\n";
    for (const auto& r : rows) {
        table.push_back({{"method", r.method},
                         {"train_n", r.train_size},
                         {"test_n", r.test_size},
                         {"test_nodes", r.test_nodes},
                         {"relative_error", r.relative_error},
                         {"mse", r.mse}});
        times.push_back({{"method", r.method},
                         {"train_n", r.train_size},
                         {"test_n", r.test_size},
                         {"eval_seconds", r.eval_seconds}});
        csv += r.method + "," + std::to_string(r.train_size) + "," + std::to_string(r.test_size) + "," +
               std::to_string(r.test_nodes) + "," + fmt(r.relative_error) + "," + fmt(r.mse) + "\n";
        std::cout << r.method << " train " << r.train_size << " test " << r.test_size << ": relative error "
                  << r.relative_error << "\n";
    }
    metrics["rows"] = table;
    write_outputs(dir, metrics, {{"rows", times}});
    write_text_file(dir / "zero_shot.csv", csv);
    return 0;
}

int cmd_ablate(const Common& c) {
    const auto cfg = resolve(c);
    const auto cells = run_ablation(cfg);
    const auto dir = out_dir(c);
    json metrics = header("ablate", cfg);
    metrics["axis"] = cfg.ablation.axis == AblationAxis::message ? "message" : "readout";
    json table = json::array();
    std::string csv = "d_h,width,d_m,d_l,test_mse,skipped\n";
    for (const auto& cell : cells) {
        json j{{"d_h", cell.d_h}, {"width", cell.width}, {"d_m", cell.d_m}, {"d_l", cell.d_l},
               {"skipped", cell.skipped}};
        if (cell.skipped) j["note"] = cell.note;
        else j["test_mse"] = cell.test_mse;
        table.push_back(j);
        csv += std::to_string(cell.d_h) + "," + std::to_string(cell.width) + "," + std::to_string(cell.d_m) + "," +
               std::to_string(cell.d_l) + "," + (cell.skipped ? std::string("") : fmt(cell.test_mse)) + "," +
               (cell.skipped ? "1" : "0") + "\n";
    }
    metrics["cells"] = table;
    write_outputs(dir, metrics, json::object());
    write_text_file(dir / "ablation.csv", csv);
    std::cout << csv;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random-feature Hamiltonian graph networks"};
    app.require_subcommand(1);

    Common gen, tr, ev, ro, zs, ab;
    std::string train_data, eval_model, eval_data, rollout_model;
    std::optional<int> eval_seeds;
    std::optional<std::size_t> rollout_steps;

    auto* c_gen = app.add_subcommand("gen-data", "Generate and write a train/test dataset");
    add_common(c_gen, gen);
    auto* c_train = app.add_subcommand("train", "Train one model and report test error");
    add_common(c_train, tr);
    c_train->add_option("--data", train_data, "Dataset directory written by gen-data");
    auto* c_eval = app.add_subcommand("eval", "Multi-seed accuracy, or evaluate a saved model");
    add_common(c_eval, ev);
    c_eval->add_option("--model", eval_model, "Saved model file");
    c_eval->add_option("--data", eval_data, "Dataset directory (with --model)");
    c_eval->add_option("--n-seeds", eval_seeds, "Number of seeds")->check(CLI::PositiveNumber);
    auto* c_roll = app.add_subcommand("rollout", "Integrate true and learned dynamics");
    add_common(c_roll, ro);
    c_roll->add_option("--model", rollout_model, "Saved model file (trains one otherwise)");
    c_roll->add_option("--steps", rollout_steps, "Integration steps");
    auto* c_zero = app.add_subcommand("zero-shot", "Evaluate on larger graphs without retraining");
    add_common(c_zero, zs);
    auto* c_abl = app.add_subcommand("ablate", "Width ablation grid");
    add_common(c_abl, ab);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (c_gen->parsed()) return cmd_gen_data(gen);
        if (c_train->parsed()) return cmd_train(tr, train_data);
        if (c_eval->parsed()) return cmd_eval(ev, eval_model, eval_data, eval_seeds);
        if (c_roll->parsed()) return cmd_rollout(ro, rollout_model, rollout_steps);
        if (c_zero->parsed()) return cmd_zero_shot(zs);
        if (c_abl->parsed()) return cmd_ablate(ab);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
