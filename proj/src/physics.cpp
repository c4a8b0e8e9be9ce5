#include "rfhgn/physics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rfhgn {

const char* to_string(SystemKind kind) {
    switch (kind) {
        case SystemKind::chain: return "chain";
        case SystemKind::lattice: return "lattice";
        case SystemKind::ring: return "ring";
    }
    return "chain";
}

SystemKind system_kind_from_string(const std::string& name) {
    if (name == "chain") return SystemKind::chain;
    if (name == "lattice") return SystemKind::lattice;
    if (name == "ring") return SystemKind::ring;
    throw std::invalid_argument("unknown system kind: " + name);
}

const char* to_string(Placement p) {
    return p == Placement::rest ? "rest" : "grid";
}

Placement placement_from_string(const std::string& name) {
    if (name == "rest") return Placement::rest;
    if (name == "grid") return Placement::grid;
    throw std::invalid_argument("unknown placement: " + name);
}

SystemSpec SystemSpec::chain(int n_nodes, int dim) {
    SystemSpec s;
    s.kind = SystemKind::chain;
    s.topology = GraphTopology::chain(n_nodes, dim);
    s.masses = Vec::Ones(n_nodes);
    s.springs = Vec::Ones(static_cast<Eigen::Index>(s.topology.n_edges()));
    return s;
}

SystemSpec SystemSpec::lattice(int nx, int ny, int dim) {
    if (dim < 2) throw std::invalid_argument("lattice systems need d >= 2");
    SystemSpec s;
    s.kind = SystemKind::lattice;
    s.topology = GraphTopology::lattice(nx, ny, dim);
    s.masses = Vec::Ones(nx * ny);
    s.springs = Vec::Ones(static_cast<Eigen::Index>(s.topology.n_edges()));
    return s;
}

SystemSpec SystemSpec::ring(int n_nodes, int dim, double rest_length) {
    if (dim < 2) throw std::invalid_argument("ring systems need d >= 2");
    SystemSpec s;
    s.kind = SystemKind::ring;
    s.topology = GraphTopology::ring(n_nodes, dim);
    s.masses = Vec::Ones(n_nodes);
    s.springs = Vec::Ones(static_cast<Eigen::Index>(s.topology.n_edges()));
    s.rest_length = rest_length;
    return s;
}

void SystemSpec::validate() const {
    if (masses.size() != topology.n_nodes()) throw std::invalid_argument("need one mass per node");
    if (springs.size() != static_cast<Eigen::Index>(topology.n_edges())) {
        throw std::invalid_argument("need one spring constant per edge");
    }
    if ((masses.array() <= 0.0).any() || (springs.array() <= 0.0).any()) {
        throw std::invalid_argument("masses and spring constants must be positive");
    }
    if (rest_length < 0.0) throw std::invalid_argument("rest length must be nonnegative");
    if (kind != SystemKind::ring && rest_length != 0.0) {
        throw std::invalid_argument("only ring systems have a rest length");
    }
}

namespace {

double kinetic(const SystemSpec& spec, const PhaseState& state) {
    const int d = spec.topology.dim();
    const auto p = shaped(state.p, d);
    double t = 0.0;
    for (Eigen::Index i = 0; i < p.rows(); ++i) t += p.row(i).squaredNorm() / spec.masses[i];
    return 0.5 * t;
}

}  // namespace

double hamiltonian_chain(const SystemSpec& spec, const PhaseState& state) {
    const int d = spec.topology.dim();
    const auto q = shaped(state.q, d);
    double v = 0.0;
    for (Eigen::Index i = 0; i + 1 < q.rows(); ++i) v += spec.springs[i] * (q.row(i + 1) - q.row(i)).squaredNorm();
    return kinetic(spec, state) + 0.5 * v;
}

double hamiltonian_lattice(const SystemSpec& spec, const PhaseState& state) {
    const auto& topo = spec.topology;
    const int d = topo.dim();
    const int nx = topo.nx();
    const int ny = topo.ny();
    const auto q = shaped(state.q, d);
    auto node = [ny](int r, int c) { return r * ny + c; };
    // Spring constants follow the grid traversal used to build the edges.
    double v = 0.0;
    Eigen::Index spring = 0;
    for (int r = 0; r < nx; ++r) {
        for (int c = 0; c < ny; ++c) {
            if (c > 0) v += spec.springs[spring++] * (q.row(node(r, c)) - q.row(node(r, c - 1))).squaredNorm();
            if (r > 0) v += spec.springs[spring++] * (q.row(node(r, c)) - q.row(node(r - 1, c))).squaredNorm();
        }
    }
    return kinetic(spec, state) + 0.5 * v;
}

double hamiltonian_ring(const SystemSpec& spec, const PhaseState& state) {
    const int d = spec.topology.dim();
    const auto q = shaped(state.q, d);
    double v = 0.0;
    Eigen::Index k = 0;
    for (const auto& e : spec.topology.edges()) {
        const double stretch = (q.row(e.hi) - q.row(e.lo)).norm() - spec.rest_length;
        v += spec.springs[k++] * stretch * stretch;
    }
    return kinetic(spec, state) + 0.5 * v;
}

double hamiltonian(const SystemSpec& spec, const PhaseState& state) {
    switch (spec.kind) {
        case SystemKind::chain: return hamiltonian_chain(spec, state);
        case SystemKind::lattice: return hamiltonian_lattice(spec, state);
        case SystemKind::ring: return hamiltonian_ring(spec, state);
    }
    return 0.0;
}

Vec true_gradient(const SystemSpec& spec, const PhaseState& state) {
    const auto& topo = spec.topology;
    const int d = topo.dim();
    const int n = topo.n_nodes();
    Vec grad = Vec::Zero(2 * d * n);
    const auto q = shaped(state.q, d);
    const auto p = shaped(state.p, d);
    for (int i = 0; i < n; ++i) grad.segment(d * n + d * i, d) = p.row(i).transpose() / spec.masses[i];
    Eigen::Index k = 0;
    for (const auto& e : topo.edges()) {
        const Eigen::RowVectorXd diff = q.row(e.hi) - q.row(e.lo);
        Eigen::RowVectorXd force;
        if (spec.rest_length == 0.0) {
            force = spec.springs[k] * diff;
        } else {
            const double len = diff.norm();
            if (len == 0.0) {
                throw DynamicsError("spring (" + std::to_string(e.hi) + "," + std::to_string(e.lo) +
                                    ") has coincident endpoints; force direction undefined");
            }
            force = spec.springs[k] * (len - spec.rest_length) / len * diff;
        }
        grad.segment(d * e.hi, d) += force.transpose();
        grad.segment(d * e.lo, d) -= force.transpose();
        ++k;
    }
    return grad;
}

PhaseState true_dynamics(const SystemSpec& spec, const PhaseState& state) {
    return PhaseState::from_flat(apply_symplectic(true_gradient(spec, state)));
}

PhaseState equilibrium_state(const SystemSpec& spec) {
    const auto& topo = spec.topology;
    const int d = topo.dim();
    const int n = topo.n_nodes();
    PhaseState s = PhaseState::zeros(d * n);
    auto q = shaped(s.q, d);
    if (spec.placement == Placement::rest && spec.kind != SystemKind::ring) return s;
    switch (spec.kind) {
        case SystemKind::chain:
            for (int i = 0; i < n; ++i) q(i, 0) = i;
            break;
        case SystemKind::lattice:
            for (int r = 0; r < topo.nx(); ++r) {
                for (int c = 0; c < topo.ny(); ++c) {
                    q(r * topo.ny() + c, 0) = r;
                    q(r * topo.ny() + c, 1) = c;
                }
            }
            break;
        case SystemKind::ring: {
            const double radius = spec.rest_length / (2.0 * std::sin(std::numbers::pi / n));
            for (int i = 0; i < n; ++i) {
                const double phi = 2.0 * std::numbers::pi * i / n;
                q(i, 0) = radius * std::cos(phi);
                q(i, 1) = radius * std::sin(phi);
            }
            break;
        }
    }
    return s;
}

namespace {

Sample draw_sample(const SystemSpec& spec, const PhaseState& eq, Range disp, Range mom, Rng& rng) {
    Sample s;
    s.state = eq;
    for (Eigen::Index k = 0; k < s.state.q.size(); ++k) s.state.q[k] += rng.uniform(disp.low, disp.high);
    for (Eigen::Index k = 0; k < s.state.p.size(); ++k) s.state.p[k] += rng.uniform(mom.low, mom.high);
    s.deriv = true_dynamics(spec, s.state);
    return s;
}

Dataset make_part(const SystemSpec& spec, std::vector<Sample> samples) {
    Dataset ds{spec.topology, std::move(samples), {}};
    if (!ds.samples.empty()) {
        ds.anchor.state = ds.samples.front().state;
        ds.anchor.h0 = hamiltonian(spec, ds.anchor.state);
    }
    return ds;
}

void check_ranges(Range disp, Range mom) {
    if (!(disp.low <= disp.high) || !(mom.low <= mom.high)) throw std::invalid_argument("ranges must be ordered");
}

}  // namespace

GeneratedData generate_dataset(const SystemSpec& spec, std::size_t count, Range disp, Range mom,
                               double train_fraction, Rng& rng) {
    spec.validate();
    check_ranges(disp, mom);
    if (count < 2) throw std::invalid_argument("need at least 2 samples to split");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw std::invalid_argument("train fraction must be in (0,1)");
    const auto eq = equilibrium_state(spec);
    std::vector<Sample> all;
    all.reserve(count);
    for (std::size_t k = 0; k < count; ++k) all.push_back(draw_sample(spec, eq, disp, mom, rng));
    rng.shuffle(all);
    auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(count)));
    n_train = std::clamp<std::size_t>(n_train, 1, count - 1);
    std::vector<Sample> train(std::make_move_iterator(all.begin()),
                              std::make_move_iterator(all.begin() + static_cast<std::ptrdiff_t>(n_train)));
    std::vector<Sample> test(std::make_move_iterator(all.begin() + static_cast<std::ptrdiff_t>(n_train)),
                             std::make_move_iterator(all.end()));
    return {make_part(spec, std::move(train)), make_part(spec, std::move(test))};
}

Dataset generate_samples(const SystemSpec& spec, std::size_t count, Range disp, Range mom, Rng& rng) {
    spec.validate();
    check_ranges(disp, mom);
    const auto eq = equilibrium_state(spec);
    std::vector<Sample> all;
    all.reserve(count);
    for (std::size_t k = 0; k < count; ++k) all.push_back(draw_sample(spec, eq, disp, mom, rng));
    return make_part(spec, std::move(all));
}

namespace {

double inf_norm(const Vec& v) {
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

}  // namespace

Trajectory stormer_verlet_rollout(const HamiltonianModel& model, const PhaseState& y0, double dt, std::size_t steps,
                                  const IntegratorOptions& opts) {
    if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
    const auto half = y0.q.size();
    const double h = 0.5 * dt;
    Trajectory traj;
    traj.dt = dt;
    traj.states.reserve(steps + 1);
    traj.energies.reserve(steps + 1);
    traj.states.push_back(y0);
    traj.energies.push_back(model.energy(y0));

    PhaseState cur = y0;
    const bool explicit_step = opts.use_separable_shortcut && model.separable();
    for (std::size_t step = 0; step < steps; ++step) {
        int updates = 0;
        PhaseState next;
        if (explicit_step) {
            Vec g = model.gradient(cur);
            const Vec p_half = cur.p - h * g.head(half);
            g = model.gradient({cur.q, p_half});
            next.q = cur.q + dt * g.tail(half);
            g = model.gradient({next.q, p_half});
            next.p = p_half - h * g.head(half);
            updates = 1;
        } else {
            auto converged = [&](const Vec& change, const Vec& x) {
                return inf_norm(change) <= opts.fp_tol * std::max(1.0, inf_norm(x));
            };
            // p_half = p_n - h dH/dq(q_n, p_half)
            Vec p_half = cur.p;
            int stage = 0;
            bool ok = false;
            for (int it = 0; it < opts.fp_max_iter; ++it) {
                const Vec g = model.gradient({cur.q, p_half});
                Vec update = cur.p - h * g.head(half);
                const Vec change = update - p_half;
                p_half = std::move(update);
                if (converged(change, p_half)) {
                    ok = true;
                    break;
                }
                ++stage;
            }
            if (!ok) {
                throw IntegrationError(step,
                                       "half-step momentum fixed point did not converge at step " +
                                           std::to_string(step),
                                       std::make_shared<const Trajectory>(std::move(traj)));
            }
            updates = std::max(updates, stage);

            // q_next = q_n + h [dH/dp(q_n, p_half) + dH/dp(q_next, p_half)]
            const Vec dp_start = model.gradient({cur.q, p_half}).tail(half);
            Vec q_next = cur.q + dt * dp_start;
            stage = 0;
            ok = false;
            for (int it = 0; it < opts.fp_max_iter; ++it) {
                const Vec g = model.gradient({q_next, p_half});
                Vec update = cur.q + h * (dp_start + g.tail(half));
                const Vec change = update - q_next;
                q_next = std::move(update);
                if (converged(change, q_next)) {
                    ok = true;
                    break;
                }
                ++stage;
            }
            if (!ok) {
                throw IntegrationError(step, "position fixed point did not converge at step " + std::to_string(step),
                                       std::make_shared<const Trajectory>(std::move(traj)));
            }
            updates = std::max(updates, stage);

            const Vec g = model.gradient({q_next, p_half});
            next.q = std::move(q_next);
            next.p = p_half - h * g.head(half);
        }
        if (!next.all_finite()) {
            throw IntegrationError(step, "non-finite state at step " + std::to_string(step),
                                   std::make_shared<const Trajectory>(std::move(traj)));
        }
        traj.fp_iterations.push_back(updates);
        traj.energies.push_back(model.energy(next));
        traj.states.push_back(next);
        cur = std::move(next);
    }
    return traj;
}

}  // namespace rfhgn
