#pragma once

#include "rfhgn/core.hpp"
#include "rfhgn/rng.hpp"

#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rfhgn {

enum class SystemKind { chain, lattice, ring };

const char* to_string(SystemKind kind);
SystemKind system_kind_from_string(const std::string& name);

/// Configuration that sampled data is displaced from. `rest` is the minimum
/// of H: all nodes coincide for zero-rest-length springs (chain, lattice),
/// a regular polygon of side L for the ring. `grid` spreads chain and lattice
/// nodes on the unit grid instead.
enum class Placement { rest, grid };

const char* to_string(Placement p);
Placement placement_from_string(const std::string& name);

/// Mass-spring system. `springs` is aligned with `topology.edges()`, which for
/// lattices covers both the row (beta^x) and column (beta^y) springs.
struct SystemSpec {
    SystemKind kind = SystemKind::chain;
    GraphTopology topology;
    Vec masses;   // one per node
    Vec springs;  // one per edge
    /// Undeformed spring length (ring only; chain and lattice use zero).
    double rest_length = 0.0;
    Placement placement = Placement::rest;

    static SystemSpec chain(int n_nodes, int dim = 2);
    static SystemSpec lattice(int nx, int ny, int dim = 3);
    static SystemSpec ring(int n_nodes, int dim = 2, double rest_length = 1.0);

    void validate() const;
};

/// H = 1/2 (sum |p_i|^2 / m_i + sum_i k_i |q_{i+1} - q_i|^2) over the chain.
double hamiltonian_chain(const SystemSpec& spec, const PhaseState& state);
/// H = 1/2 (sum |p_rc|^2 / m_rc + row springs + column springs) on the grid.
double hamiltonian_lattice(const SystemSpec& spec, const PhaseState& state);
/// H = sum |p_i|^2 / (2 m_i) + 1/2 sum_edges k (|q_i - q_j| - L)^2.
double hamiltonian_ring(const SystemSpec& spec, const PhaseState& state);
/// Dispatches on spec.kind.
double hamiltonian(const SystemSpec& spec, const PhaseState& state);

class DynamicsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// [dH/dq; dH/dp] in closed form.
Vec true_gradient(const SystemSpec& spec, const PhaseState& state);
/// y_dot = J grad H. Throws DynamicsError when a rest-length spring has
/// coincident endpoints (force direction undefined).
PhaseState true_dynamics(const SystemSpec& spec, const PhaseState& state);

/// Reference configuration per spec.placement with p = 0. Grid placement puts
/// chain node i at (i, 0) and lattice node (r, c) at (r, c, 0); the ring is
/// always a regular polygon with side L.
PhaseState equilibrium_state(const SystemSpec& spec);

struct Range {
    double low = 0.0;
    double high = 0.0;
};

struct GeneratedData {
    Dataset train;
    Dataset test;
};

/// Equilibrium plus uniform displacements of q and p, exact derivatives,
/// shuffled and split. Each part is anchored at its first sample.
GeneratedData generate_dataset(const SystemSpec& spec, std::size_t count, Range disp, Range mom,
                               double train_fraction, Rng& rng);

/// Only the test-style sample set (no split), anchored at its first sample.
Dataset generate_samples(const SystemSpec& spec, std::size_t count, Range disp, Range mom, Rng& rng);

/// A Hamiltonian the integrator can evaluate.
class HamiltonianModel {
public:
    virtual ~HamiltonianModel() = default;
    virtual double energy(const PhaseState& state) const = 0;
    /// [dH/dq; dH/dp]
    virtual Vec gradient(const PhaseState& state) const = 0;
    /// dH/dq independent of p and dH/dp independent of q.
    virtual bool separable() const { return false; }
};

class AnalyticHamiltonian final : public HamiltonianModel {
public:
    explicit AnalyticHamiltonian(SystemSpec spec) : spec_(std::move(spec)) {}
    double energy(const PhaseState& state) const override { return hamiltonian(spec_, state); }
    Vec gradient(const PhaseState& state) const override { return true_gradient(spec_, state); }
    bool separable() const override { return true; }
    const SystemSpec& spec() const { return spec_; }

private:
    SystemSpec spec_;
};

struct Trajectory {
    double dt = 0.0;
    std::vector<PhaseState> states;
    std::vector<double> energies;
    /// Largest number of fixed-point updates that changed an iterate, per step.
    std::vector<int> fp_iterations;
};

struct IntegratorOptions {
    double fp_tol = 1e-12;
    int fp_max_iter = 50;
    /// Use the explicit leapfrog path when the model reports separability.
    bool use_separable_shortcut = true;
};

class IntegrationError : public std::runtime_error {
public:
    IntegrationError(std::size_t step, const std::string& what, std::shared_ptr<const Trajectory> partial = {})
        : std::runtime_error(what), step_(step), partial_(std::move(partial)) {}
    std::size_t step() const { return step_; }
    /// States completed before the failing step (may be null).
    const Trajectory* partial() const { return partial_.get(); }

private:
    std::size_t step_;
    std::shared_ptr<const Trajectory> partial_;
};

/// Generalized Stormer-Verlet:
///   p_half = p_n - dt/2 dH/dq(q_n, p_half)                       (fixed point)
///   q_next = q_n + dt/2 [dH/dp(q_n, p_half) + dH/dp(q_next, p_half)] (fixed point)
///   p_next = p_half - dt/2 dH/dq(q_next, p_half)
Trajectory stormer_verlet_rollout(const HamiltonianModel& model, const PhaseState& y0, double dt, std::size_t steps,
                                  const IntegratorOptions& opts = {});

}  // namespace rfhgn
