#include "rfhgn/gradients.hpp"

#include "rfhgn/detail/basis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rfhgn {

namespace {

/// d vec(B) / d(reference coordinates): row a*d + b holds dB(a, b), column
/// t*d + k the k-th coordinate of the t-th reference node.
template <int K>
Mat basis_derivative_impl(int d, const double* r1, const double* r2, const InvarianceConfig& cfg) {
    using D = detail::Dual<K>;
    std::array<D, 3> a{};
    std::array<D, 3> b{};
    for (int k = 0; k < d; ++k) a[k] = D::variable(r1[k], k);
    if (r2 != nullptr) {
        for (int k = 0; k < d; ++k) b[k] = D::variable(r2[k], d + k);
    }
    const auto res =
        detail::basis_from_refs<D>(d, a.data(), r2 != nullptr ? b.data() : nullptr, cfg.eps_colinear, cfg.eps_deg);
    Mat db(d * d, K);
    for (int row = 0; row < d; ++row) {
        for (int col = 0; col < d; ++col) {
            for (int k = 0; k < K; ++k) db(row * d + col, k) = res.e[col][row].g[k];
        }
    }
    return db;
}

Mat basis_derivative(const InvariantFrame& frame, const Vec& centered, int d, const InvarianceConfig& cfg) {
    const auto& refs = frame.ref_indices;
    const double* r1 = &centered[d * refs[0]];
    const double* r2 = refs.size() > 1 ? &centered[d * refs[1]] : nullptr;
    if (d == 2) return basis_derivative_impl<2>(d, r1, nullptr, cfg);
    return basis_derivative_impl<6>(d, r1, r2, cfg);
}

/// Pulls adjoints of node features (N*d_V x C) and edge feature rows
/// (rows*d_E x C) back to the raw inputs [q; p] (2dN x C).
void features_to_inputs(const GraphTopology& topo, const PhaseState& state, const ForwardCache& cache,
                        const InvarianceConfig& inv_cfg, FrameGradient mode, const Mat& adj_v, const Mat& adj_e,
                        Mat& out) {
    const int d = topo.dim();
    const int n = topo.n_nodes();
    const int d_v = 2 * d;
    const int d_e = d + 1;
    const auto channels = adj_v.cols();
    const EdgeMode edge_mode = inv_cfg.edge_mode;
    const auto& frame = cache.inv.frame;

    Mat adj_qbar(n * d, channels);
    Mat adj_pbar(n * d, channels);
    for (int i = 0; i < n; ++i) {
        adj_qbar.middleRows(i * d, d) = adj_v.middleRows(i * d_v, d);
        adj_pbar.middleRows(i * d, d) = adj_v.middleRows(i * d_v + d, d);
    }
    Mat disp(d, channels);
    for (Eigen::Index ek = 0; ek < cache.edge_feat.rows(); ++ek) {
        disp = adj_e.middleRows(ek * d_e, d);
        const double len = cache.edge_feat(ek, d);
        if (len > 0.0) {
            for (int r = 0; r < d; ++r) disp.row(r) += (cache.edge_feat(ek, r) / len) * adj_e.row(ek * d_e + d);
        }
        const auto ij = edge_row_nodes(topo, ek, edge_mode);
        adj_qbar.middleRows(ij.hi * d, d) += disp;
        adj_qbar.middleRows(ij.lo * d, d) -= disp;
    }

    const Mat& basis = frame.basis;
    out.resize(2 * d * n, channels);
    for (int i = 0; i < n; ++i) {
        out.middleRows(i * d, d).noalias() = basis * adj_qbar.middleRows(i * d, d);
        out.middleRows(d * n + i * d, d).noalias() = basis * adj_pbar.middleRows(i * d, d);
    }

    if (mode == FrameGradient::exact && d >= 2 && !frame.degenerate && !frame.ref_indices.empty()) {
        Vec centered = state.q;
        auto c_nodes = shaped(centered, d);
        for (int i = 0; i < n; ++i) c_nodes.row(i) -= frame.mean_q.transpose();
        const auto p_nodes = shaped(state.p, d);

        Mat basis_adj = Mat::Zero(d * d, channels);
        for (int i = 0; i < n; ++i) {
            for (int a = 0; a < d; ++a) {
                for (int b = 0; b < d; ++b) {
                    basis_adj.row(a * d + b) +=
                        c_nodes(i, a) * adj_qbar.row(i * d + b) + p_nodes(i, a) * adj_pbar.row(i * d + b);
                }
            }
        }
        const Mat db = basis_derivative(frame, centered, d, inv_cfg);
        const Mat adj_ref = db.transpose() * basis_adj;
        for (std::size_t t = 0; t < frame.ref_indices.size(); ++t) {
            const auto row = static_cast<Eigen::Index>(t) * d;
            out.middleRows(frame.ref_indices[t] * d, d) += adj_ref.middleRows(row, d);
        }
    }

    Mat mean_adj = Mat::Zero(d, channels);
    for (int i = 0; i < n; ++i) mean_adj += out.middleRows(i * d, d);
    mean_adj /= static_cast<double>(n);
    for (int i = 0; i < n; ++i) out.middleRows(i * d, d) -= mean_adj;
}

struct ActivationSlopes {
    Mat node;     // N x d_h
    Mat edge;     // edge rows x d_h
    Mat msg;      // 2E x d_M
    Mat by_src;   // N x d_M, sum of message slopes over messages leaving node i
    Mat by_edge;  // edge rows x d_M, sum over the messages reading each edge row
};

ActivationSlopes slopes(const GraphTopology& topo, const ForwardCache& c, EdgeMode mode) {
    auto grad = [](double x) { return softplus_grad(x); };
    ActivationSlopes s;
    s.node = c.node_pre.unaryExpr(grad);
    s.edge = c.edge_pre.unaryExpr(grad);
    s.msg = c.msg_pre.unaryExpr(grad);
    const auto& edges = topo.edges();
    s.by_src = Mat::Zero(c.node_pre.rows(), c.msg_pre.cols());
    s.by_edge = Mat::Zero(c.edge_pre.rows(), c.msg_pre.cols());
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto row = static_cast<Eigen::Index>(2 * k);
        s.by_src.row(edges[k].hi) += s.msg.row(row);
        s.by_src.row(edges[k].lo) += s.msg.row(row + 1);
        s.by_edge.row(edge_row_of_message(row, mode)) += s.msg.row(row);
        s.by_edge.row(edge_row_of_message(row + 1, mode)) += s.msg.row(row + 1);
    }
    return s;
}

void vector_adjoint(const ModelParams& params, const GraphTopology& topo, const PhaseState& state,
                    const ForwardCache& cache, const Vec& seed, FrameGradient mode, Vec& out) {
    const int d_h = params.dims.d_h;
    const int d_m = params.dims.d_m;
    const auto s = slopes(topo, cache, params.invariance.edge_mode);
    const auto w_src = params.msg_enc.weight.leftCols(d_h);
    const auto w_edge = params.msg_enc.weight.rightCols(d_h);
    const Eigen::RowVectorXd seed_node = seed.head(d_h).transpose();
    const Eigen::RowVectorXd seed_msg = seed.tail(d_m).transpose();

    Mat adj_pre_v = s.by_src.array().rowwise() * seed_msg.array();
    adj_pre_v = adj_pre_v * w_src;
    adj_pre_v.rowwise() += seed_node;
    adj_pre_v.array() *= s.node.array();
    const RowMat adj_v_nodes = adj_pre_v * params.node_enc.weight;

    Mat adj_pre_e = s.by_edge.array().rowwise() * seed_msg.array();
    adj_pre_e = (adj_pre_e * w_edge).cwiseProduct(s.edge);
    const RowMat adj_e_edges = adj_pre_e * params.edge_enc.weight;

    const Mat adj_v = Eigen::Map<const Vec>(adj_v_nodes.data(), adj_v_nodes.size());
    const Mat adj_e = Eigen::Map<const Vec>(adj_e_edges.data(), adj_e_edges.size());
    Mat result;
    features_to_inputs(topo, state, cache, params.invariance, mode, adj_v, adj_e, result);
    out = result.col(0);
}

}  // namespace

void jacobian_from_cache(const ModelParams& params, const GraphTopology& topo, const PhaseState& state,
                         const ForwardCache& cache, Mat& out) {
    const int d_h = params.dims.d_h;
    const int d_m = params.dims.d_m;
    const int d_l = params.dims.d_l();
    const int d_v = params.dims.d_v();
    const int d_e = params.dims.d_e();
    const int n = topo.n_nodes();
    const auto n_edges = cache.edge_feat.rows();
    const auto s = slopes(topo, cache, params.invariance.edge_mode);
    const Mat w_src = params.msg_enc.weight.leftCols(d_h);
    const Mat w_edge = params.msg_enc.weight.rightCols(d_h);

    // All d_L output channels are propagated together: the adjoint of each
    // feature vector is a (feature dim x d_L) matrix.
    Mat adj_v = Mat::Zero(n * d_v, d_l);
    Mat scaled(d_h, d_v);
    Mat through_msg(d_m, d_v);
    for (int i = 0; i < n; ++i) {
        scaled.noalias() = s.node.row(i).transpose().asDiagonal() * params.node_enc.weight;
        adj_v.block(i * d_v, 0, d_v, d_h) = scaled.transpose();
        through_msg.noalias() = w_src * scaled;
        through_msg = s.by_src.row(i).transpose().asDiagonal() * through_msg;
        adj_v.block(i * d_v, d_h, d_v, d_m) = through_msg.transpose();
    }
    Mat adj_e = Mat::Zero(n_edges * d_e, d_l);
    Mat scaled_e(d_h, d_e);
    Mat through_edge(d_m, d_e);
    for (Eigen::Index k = 0; k < n_edges; ++k) {
        scaled_e.noalias() = s.edge.row(k).transpose().asDiagonal() * params.edge_enc.weight;
        through_edge.noalias() = w_edge * scaled_e;
        through_edge = s.by_edge.row(k).transpose().asDiagonal() * through_edge;
        adj_e.block(k * d_e, d_h, d_e, d_m) = through_edge.transpose();
    }
    features_to_inputs(topo, state, cache, params.invariance, params.invariance.frame_gradient, adj_v, adj_e, out);
}

InputJacobian jacobian_global(const ModelParams& params, const GraphTopology& topo, const PhaseState& state) {
    ForwardCache cache;
    forward_into(params, topo, state, cache);
    InputJacobian jac;
    jacobian_from_cache(params, topo, state, cache, jac.rows);
    return jac;
}

double value_and_grad(const ModelParams& params, const GraphTopology& topo, const PhaseState& state, Vec& grad,
                      FrameGradient mode) {
    params.validate_for(topo, true);
    ForwardCache cache;
    forward_into(params, topo, state, cache);
    vector_adjoint(params, topo, state, cache, params.readout_w, mode, grad);
    return cache.hamiltonian;
}

Vec grad_hamiltonian(const ModelParams& params, const GraphTopology& topo, const PhaseState& state) {
    Vec grad;
    value_and_grad(params, topo, state, grad, FrameGradient::exact);
    return grad;
}

Vec model_gradient(const ModelParams& params, const GraphTopology& topo, const PhaseState& state) {
    Vec grad;
    value_and_grad(params, topo, state, grad, params.invariance.frame_gradient);
    return grad;
}

Vec predicted_dynamics(const ModelParams& params, const GraphTopology& topo, const PhaseState& state) {
    return apply_symplectic(model_gradient(params, topo, state));
}

FdCheckResult finite_difference_check(const ModelParams& params, const GraphTopology& topo, const PhaseState& state,
                                      double step) {
    FdCheckResult res;
    if (!(step > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
    const auto base = encode_invariant(state, topo, params.invariance).frame;
    if (!base.smooth()) {
        res.skipped = true;
        res.reason = "invariant frame is degenerate at this state";
        return res;
    }
    const Vec grad = grad_hamiltonian(params, topo, state);
    const Vec y = state.flat();
    Vec fd(y.size());
    auto same_branch = [&](const PhaseState& s) {
        const auto f = encode_invariant(s, topo, params.invariance).frame;
        return f.smooth() && f.ref_indices == base.ref_indices && f.colinear_branch == base.colinear_branch;
    };
    for (Eigen::Index k = 0; k < y.size(); ++k) {
        Vec plus = y;
        Vec minus = y;
        plus[k] += step;
        minus[k] -= step;
        const auto sp = PhaseState::from_flat(plus);
        const auto sm = PhaseState::from_flat(minus);
        if (!same_branch(sp) || !same_branch(sm)) {
            res.skipped = true;
            res.reason = "perturbation changes the reference selection at coordinate " + std::to_string(k);
            return res;
        }
        fd[k] = (predict_hamiltonian(params, topo, sp) - predict_hamiltonian(params, topo, sm)) / (2.0 * step);
    }
    const double scale = std::max({grad.cwiseAbs().maxCoeff(), fd.cwiseAbs().maxCoeff(), 1e-300});
    res.max_rel_error = (fd - grad).cwiseAbs().maxCoeff() / scale;
    return res;
}

}  // namespace rfhgn
