#pragma once

#include "rfhgn/core.hpp"
#include "rfhgn/invariance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rfhgn {

enum class Activation { softplus };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// softplus(x) = log(1 + e^x), evaluated without overflow.
inline double softplus(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}
inline float softplus(float x) {
    return std::max(x, 0.0f) + std::log1p(std::exp(-std::abs(x)));
}
/// d/dx softplus(x) = logistic(x).
inline double softplus_grad(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// Dense layer y = W x + b, W is out_dim x in_dim.
struct LayerParams {
    Mat weight;
    Vec bias;

    int in_dim() const { return static_cast<int>(weight.cols()); }
    int out_dim() const { return static_cast<int>(weight.rows()); }
};

struct ModelDims {
    int dim = 2;
    int d_h = 64;  ///< node and edge encoder width
    int d_m = 448; ///< message encoder width

    int d_v() const { return 2 * dim; }
    int d_e() const { return dim + 1; }
    int d_l() const { return d_h + d_m; }

    /// Dims from an encoder width and a total readout width.
    static ModelDims from_readout(int dim, int d_h, int d_l) { return {dim, d_h, d_l - d_h}; }

    friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

struct ModelParams {
    ModelDims dims;
    LayerParams node_enc;  // d_h x d_V
    LayerParams edge_enc;  // d_h x d_E
    LayerParams msg_enc;   // d_M x 2 d_h
    Vec readout_w;         // d_L
    double readout_b = 0.0;
    Activation activation = Activation::softplus;
    InvarianceConfig invariance;

    /// Throws std::invalid_argument on any shape inconsistency.
    void validate() const;
    /// Throws unless the encoders are consistent with `topo` (readout may be empty).
    void validate_for(const GraphTopology& topo, bool need_readout) const;
};

/// Intermediate quantities of one forward pass. Per-item data is stored one
/// item per row. Message rows come in pairs: row 2k is the message from
/// edges[k].hi to edges[k].lo, row 2k+1 the reverse direction.
struct ForwardCache {
    InvariantState inv;
    Mat node_feat;  // N x d_V
    Mat node_pre;   // N x d_h
    Mat node_enc;   // N x d_h
    Mat edge_feat;  // edge_feature_rows() x d_E
    Mat edge_pre;   // edge_feature_rows() x d_h
    Mat edge_enc;   // edge_feature_rows() x d_h
    Mat msg_pre;    // 2E x d_M
    Mat msg;        // 2E x d_M
    Mat agg;        // N x d_M, summed incoming messages
    Vec global;     // d_L
    double hamiltonian = 0.0;
};

/// v_i = [q_bar_i; p_bar_i], one row per node.
Mat node_features(const InvariantState& inv, int dim);
/// e_ij = [q_bar_i - q_bar_j; |q_bar_i - q_bar_j|]. Shared mode: one row per
/// stored edge with i = hi, j = lo. Directed mode: rows 2k and 2k+1 hold
/// edge k from hi to lo and from lo to hi.
Mat edge_features(const InvariantState& inv, const GraphTopology& topo, EdgeMode mode = EdgeMode::directed);

inline Eigen::Index edge_feature_rows(const GraphTopology& topo, EdgeMode mode) {
    const auto n = static_cast<Eigen::Index>(topo.n_edges());
    return mode == EdgeMode::directed ? 2 * n : n;
}
/// Edge feature row read by message row `msg_row`.
inline Eigen::Index edge_row_of_message(Eigen::Index msg_row, EdgeMode mode) {
    return mode == EdgeMode::directed ? msg_row : msg_row / 2;
}
/// Nodes (i, j) of edge feature row `row`, so that the row holds q_bar_i - q_bar_j.
inline Edge edge_row_nodes(const GraphTopology& topo, Eigen::Index row, EdgeMode mode) {
    if (mode == EdgeMode::shared) return topo.edges()[static_cast<std::size_t>(row)];
    const auto& e = topo.edges()[static_cast<std::size_t>(row / 2)];
    return row % 2 == 0 ? e : Edge{e.lo, e.hi};
}

struct ForwardResult {
    double hamiltonian = 0.0;
    ForwardCache cache;
};

ForwardResult forward(const ModelParams& params, const GraphTopology& topo, const PhaseState& state);

/// Pooled graph feature h_G (no readout).
Vec global_features(const ModelParams& params, const GraphTopology& topo, const PhaseState& state);

/// Runs the forward pass up to pooling; `cache.hamiltonian` is left at 0 when
/// the readout is empty.
void forward_into(const ModelParams& params, const GraphTopology& topo, const PhaseState& state, ForwardCache& cache);

/// Hamiltonian only. With Precision::single_precision the dense layers run in
/// float (the invariant encoding stays in double).
double predict_hamiltonian(const ModelParams& params, const GraphTopology& topo, const PhaseState& state,
                           Precision precision = Precision::double_precision);

}  // namespace rfhgn
