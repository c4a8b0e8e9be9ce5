#include "rfhgn/network.hpp"

#include <stdexcept>
#include <string>

namespace rfhgn {

const char* to_string(Activation a) {
    switch (a) {
        case Activation::softplus: return "softplus";
    }
    return "softplus";
}

Activation activation_from_string(const std::string& name) {
    if (name == "softplus") return Activation::softplus;
    throw std::invalid_argument("unsupported activation: " + name);
}

namespace {

void check_layer(const LayerParams& layer, int out_dim, int in_dim, const char* name) {
    if (layer.weight.rows() != out_dim || layer.weight.cols() != in_dim || layer.bias.size() != out_dim) {
        throw std::invalid_argument(std::string(name) + ": expected " + std::to_string(out_dim) + "x" +
                                    std::to_string(in_dim) + " weight and length " + std::to_string(out_dim) +
                                    " bias, got " + std::to_string(layer.weight.rows()) + "x" +
                                    std::to_string(layer.weight.cols()) + " / " + std::to_string(layer.bias.size()));
    }
}

}  // namespace

void ModelParams::validate() const {
    if (dims.dim < 1 || dims.dim > 3) throw std::invalid_argument("model dim must be 1, 2 or 3");
    if (dims.d_h < 1) throw std::invalid_argument("d_h must be >= 1");
    if (dims.d_m < 1) throw std::invalid_argument("d_M must be >= 1 (d_L = d_h + d_M)");
    check_layer(node_enc, dims.d_h, dims.d_v(), "node encoder");
    check_layer(edge_enc, dims.d_h, dims.d_e(), "edge encoder");
    check_layer(msg_enc, dims.d_m, 2 * dims.d_h, "message encoder");
    if (readout_w.size() != 0 && readout_w.size() != dims.d_l()) {
        throw std::invalid_argument("readout width " + std::to_string(readout_w.size()) + " != d_L " +
                                    std::to_string(dims.d_l()));
    }
}

void ModelParams::validate_for(const GraphTopology& topo, bool need_readout) const {
    validate();
    if (topo.dim() != dims.dim) {
        throw std::invalid_argument("model built for d=" + std::to_string(dims.dim) + " but graph has d=" +
                                    std::to_string(topo.dim()));
    }
    if (need_readout && readout_w.size() != dims.d_l()) throw std::invalid_argument("model has no readout layer");
}

Mat node_features(const InvariantState& inv, int dim) {
    const auto n = inv.q_bar.size() / dim;
    Mat v(n, 2 * dim);
    v.leftCols(dim) = shaped(inv.q_bar, dim);
    v.rightCols(dim) = shaped(inv.p_bar, dim);
    return v;
}

Mat edge_features(const InvariantState& inv, const GraphTopology& topo, EdgeMode mode) {
    const int d = topo.dim();
    const auto q = shaped(inv.q_bar, d);
    const auto rows = edge_feature_rows(topo, mode);
    Mat e(rows, d + 1);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto ij = edge_row_nodes(topo, r, mode);
        const Eigen::RowVectorXd diff = q.row(ij.hi) - q.row(ij.lo);
        e.row(r).head(d) = diff;
        e(r, d) = diff.norm();
    }
    return e;
}

namespace {

template <class Derived>
void apply_softplus(const Eigen::MatrixBase<Derived>& pre, Mat& out) {
    out = pre.unaryExpr([](double x) { return softplus(x); });
}

}  // namespace

void forward_into(const ModelParams& params, const GraphTopology& topo, const PhaseState& state, ForwardCache& c) {
    params.validate_for(topo, false);
    const int d = topo.dim();
    const int d_h = params.dims.d_h;
    const int d_m = params.dims.d_m;
    const auto n_nodes = static_cast<Eigen::Index>(topo.n_nodes());
    const auto& edges = topo.edges();

    c.inv = encode_invariant(state, topo, params.invariance);
    c.node_feat = node_features(c.inv, d);
    const EdgeMode mode = params.invariance.edge_mode;
    c.edge_feat = edge_features(c.inv, topo, mode);

    c.node_pre.noalias() = c.node_feat * params.node_enc.weight.transpose();
    c.node_pre.rowwise() += params.node_enc.bias.transpose();
    apply_softplus(c.node_pre, c.node_enc);

    c.edge_pre.noalias() = c.edge_feat * params.edge_enc.weight.transpose();
    c.edge_pre.rowwise() += params.edge_enc.bias.transpose();
    apply_softplus(c.edge_pre, c.edge_enc);

    // The message pre-activation is affine in [h_src; h_edge], so the two
    // halves are projected once per node and once per edge row.
    const auto w_src = params.msg_enc.weight.leftCols(d_h);
    const auto w_edge = params.msg_enc.weight.rightCols(d_h);
    const Mat node_proj = c.node_enc * w_src.transpose();
    const Mat edge_proj = c.edge_enc * w_edge.transpose();

    const auto n_dir = static_cast<Eigen::Index>(2 * edges.size());
    c.msg_pre.resize(n_dir, d_m);
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto row = static_cast<Eigen::Index>(2 * k);
        c.msg_pre.row(row) =
            node_proj.row(edges[k].hi) + edge_proj.row(edge_row_of_message(row, mode)) + params.msg_enc.bias.transpose();
        c.msg_pre.row(row + 1) = node_proj.row(edges[k].lo) + edge_proj.row(edge_row_of_message(row + 1, mode)) +
                                 params.msg_enc.bias.transpose();
    }
    apply_softplus(c.msg_pre, c.msg);

    c.agg = Mat::Zero(n_nodes, d_m);
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto row = static_cast<Eigen::Index>(2 * k);
        c.agg.row(edges[k].lo) += c.msg.row(row);
        c.agg.row(edges[k].hi) += c.msg.row(row + 1);
    }

    c.global.resize(params.dims.d_l());
    c.global.head(d_h) = c.node_enc.colwise().sum().transpose();
    c.global.tail(d_m) = c.agg.colwise().sum().transpose();
    c.hamiltonian = params.readout_w.size() == params.dims.d_l() ? params.readout_w.dot(c.global) + params.readout_b
                                                                 : 0.0;
}

ForwardResult forward(const ModelParams& params, const GraphTopology& topo, const PhaseState& state) {
    params.validate_for(topo, true);
    ForwardResult out;
    forward_into(params, topo, state, out.cache);
    out.hamiltonian = out.cache.hamiltonian;
    return out;
}

Vec global_features(const ModelParams& params, const GraphTopology& topo, const PhaseState& state) {
    ForwardCache cache;
    forward_into(params, topo, state, cache);
    return std::move(cache.global);
}

namespace {

double hamiltonian_single(const ModelParams& params, const GraphTopology& topo, const PhaseState& state) {
    using MatF = Eigen::MatrixXf;
    const int d = topo.dim();
    const int d_h = params.dims.d_h;
    const auto inv = encode_invariant(state, topo, params.invariance);
    const MatF v = node_features(inv, d).cast<float>();
    const EdgeMode mode = params.invariance.edge_mode;
    const MatF e = edge_features(inv, topo, mode).cast<float>();
    auto act = [](const MatF& m) { return MatF(m.unaryExpr([](float x) { return softplus(x); })); };

    MatF pre = v * params.node_enc.weight.cast<float>().transpose();
    pre.rowwise() += params.node_enc.bias.cast<float>().transpose();
    const MatF h_v = act(pre);
    pre = e * params.edge_enc.weight.cast<float>().transpose();
    pre.rowwise() += params.edge_enc.bias.cast<float>().transpose();
    const MatF h_e = act(pre);

    const MatF w_m = params.msg_enc.weight.cast<float>();
    const Eigen::RowVectorXf b_m = params.msg_enc.bias.cast<float>().transpose();
    const MatF node_proj = h_v * w_m.leftCols(d_h).transpose();
    const MatF edge_proj = h_e * w_m.rightCols(d_h).transpose();
    Eigen::RowVectorXf msg_sum = Eigen::RowVectorXf::Zero(params.dims.d_m);
    const auto& edges = topo.edges();
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto row = static_cast<Eigen::Index>(2 * k);
        const Eigen::RowVectorXf fwd = node_proj.row(edges[k].hi) + edge_proj.row(edge_row_of_message(row, mode)) + b_m;
        const Eigen::RowVectorXf bwd =
            node_proj.row(edges[k].lo) + edge_proj.row(edge_row_of_message(row + 1, mode)) + b_m;
        msg_sum += fwd.unaryExpr([](float x) { return softplus(x); });
        msg_sum += bwd.unaryExpr([](float x) { return softplus(x); });
    }
    const Eigen::VectorXf w = params.readout_w.cast<float>();
    const float h = w.head(d_h).dot(h_v.colwise().sum().transpose()) + w.tail(params.dims.d_m).dot(msg_sum.transpose());
    return static_cast<double>(h) + params.readout_b;
}

}  // namespace

double predict_hamiltonian(const ModelParams& params, const GraphTopology& topo, const PhaseState& state,
                           Precision precision) {
    params.validate_for(topo, true);
    if (precision == Precision::single_precision) return hamiltonian_single(params, topo, state);
    ForwardCache cache;
    forward_into(params, topo, state, cache);
    return cache.hamiltonian;
}

}  // namespace rfhgn
