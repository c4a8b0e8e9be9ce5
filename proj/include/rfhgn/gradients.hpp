#pragma once

#include "rfhgn/network.hpp"

namespace rfhgn {

/// d(h_G)/dy for y = [q; p]: one row per input coordinate (2dN rows), one
/// column per global feature (d_L columns). Discrete choices of the
/// invariant frame (reference nodes, colinear branch) are held fixed; the
/// derivative flows through centering, and through the basis vectors when
/// params.invariance.frame_gradient is exact.
struct InputJacobian {
    Mat rows;
};

InputJacobian jacobian_global(const ModelParams& params, const GraphTopology& topo, const PhaseState& state);

/// Same as jacobian_global but reuses a cache from forward_into().
void jacobian_from_cache(const ModelParams& params, const GraphTopology& topo, const PhaseState& state,
                         const ForwardCache& cache, Mat& out);

/// Exact [dH/dq; dH/dp] of the network Hamiltonian, by one reverse sweep
/// seeded with the readout weights.
Vec grad_hamiltonian(const ModelParams& params, const GraphTopology& topo, const PhaseState& state);

/// The gradient field the model was fit with: grad_hamiltonian() in exact
/// mode, the frozen-basis field otherwise.
Vec model_gradient(const ModelParams& params, const GraphTopology& topo, const PhaseState& state);

/// Hamiltonian value and gradient (in `mode`) from one forward and one
/// reverse sweep.
double value_and_grad(const ModelParams& params, const GraphTopology& topo, const PhaseState& state, Vec& grad,
                      FrameGradient mode);

/// Predicted time derivative J model_gradient.
Vec predicted_dynamics(const ModelParams& params, const GraphTopology& topo, const PhaseState& state);

struct FdCheckResult {
    double max_rel_error = 0.0;
    /// Frame not smooth at the state, or a perturbed state switched the
    /// reference selection or colinear branch.
    bool skipped = false;
    std::string reason;
};

/// Central differences of forward() against grad_hamiltonian(), error
/// relative to the largest gradient entry.
FdCheckResult finite_difference_check(const ModelParams& params, const GraphTopology& topo, const PhaseState& state,
                                      double step);

}  // namespace rfhgn
