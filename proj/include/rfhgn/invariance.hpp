#pragma once

#include "rfhgn/core.hpp"

#include <string>
#include <vector>

namespace rfhgn {

/// How the rotation basis enters input derivatives. `exact` differentiates
/// through B(q); `frozen` holds B fixed at its current value, which gives the
/// rotation-equivariant field B grad f(q_bar, p_bar).
enum class FrameGradient { exact, frozen };

const char* to_string(FrameGradient mode);
FrameGradient frame_gradient_from_string(const std::string& name);

/// Orientation of edge features. `shared` computes q_bar_hi - q_bar_lo once
/// per stored edge and reuses its encoding for both message directions, so
/// the sign of the displacement follows the node labels. `directed` encodes
/// q_bar_src - q_bar_dst per message direction and is exactly invariant
/// under relabeling.
enum class EdgeMode { shared, directed };

const char* to_string(EdgeMode mode);
EdgeMode edge_mode_from_string(const std::string& name);

struct InvarianceConfig {
    /// Centered positions with norm below this count as coincident with the mean.
    double eps_deg = 1e-10;
    /// |e1 . e2'| above this switches to the cross-product fallback (d = 3).
    double eps_colinear = 0.98;
    /// Mode for the Jacobian used in training and for model dynamics.
    FrameGradient frame_gradient = FrameGradient::frozen;
    EdgeMode edge_mode = EdgeMode::directed;
};

struct InvariantFrame {
    Vec mean_q;
    /// Orthonormal d x d matrix, columns e_1..e_d.
    Mat basis;
    std::vector<int> ref_indices;
    bool colinear_branch = false;
    /// No usable reference node: identity basis.
    bool degenerate = false;
    /// d = 3 only: second direction taken from a coordinate axis because the
    /// reference geometry did not determine one.
    bool axis_fallback = false;

    /// True when the frame is a smooth function of the positions locally.
    bool smooth() const { return !degenerate && !axis_fallback; }
};

struct InvariantState {
    Vec q_bar;
    Vec p_bar;
    InvariantFrame frame;
};

struct CenteredPositions {
    Vec q;
    Vec mean;
};

CenteredPositions center_positions(const PhaseState& state, const GraphTopology& topo);

/// One reference node for d = 2, two for d = 3, none for d = 1. Nodes are
/// ranked by distance to the mean, ties broken by the polar angle of the
/// first two coordinates in [0, 2pi), then (d = 3) by the angle to the second
/// axis, then by index. Nodes closer than eps_deg to the mean are skipped.
std::vector<int> select_reference(const Vec& centered_q, int dim, double eps_deg);

InvariantFrame build_basis(const Vec& centered_q, const std::vector<int>& refs, int dim,
                           const InvarianceConfig& cfg = {});

/// q_bar_i = B^T (q_i - mean), p_bar_i = B^T p_i.
InvariantState encode_invariant(const PhaseState& state, const GraphTopology& topo,
                                const InvarianceConfig& cfg = {});

}  // namespace rfhgn
