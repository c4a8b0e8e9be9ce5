#pragma once

#include "rfhgn/experiments.hpp"
#include "rfhgn/gradients.hpp"
#include "rfhgn/invariance.hpp"
#include "rfhgn/network.hpp"
#include "rfhgn/rng.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace testutil {

using namespace rfhgn;

inline ModelParams random_model(int dim, int d_h, int d_m, std::uint64_t seed,
                                FrameGradient mode = FrameGradient::exact, EdgeMode edges = EdgeMode::directed) {
    Rng rng(seed, 7);
    SamplerConfig cfg;
    cfg.method = SamplerMethod::elm;
    ModelParams p;
    p.dims = {dim, d_h, d_m};
    p.node_enc = sample_elm(2 * dim, d_h, cfg, rng);
    p.edge_enc = sample_elm(dim + 1, d_h, cfg, rng);
    p.msg_enc = sample_elm(2 * d_h, d_m, cfg, rng);
    p.msg_enc.weight *= 0.3;
    p.readout_w.resize(d_h + d_m);
    for (Eigen::Index i = 0; i < p.readout_w.size(); ++i) p.readout_w[i] = rng.normal();
    p.readout_b = rng.uniform(-1.0, 1.0);
    p.invariance.frame_gradient = mode;
    p.invariance.edge_mode = edges;
    return p;
}

inline PhaseState random_state(int coord_size, Rng& rng, double scale = 1.0) {
    PhaseState s = PhaseState::zeros(coord_size);
    for (int i = 0; i < coord_size; ++i) {
        s.q[i] = rng.uniform(-scale, scale);
        s.p[i] = rng.uniform(-scale, scale);
    }
    return s;
}

inline Mat rotation2(double angle) {
    Mat r(2, 2);
    r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return r;
}

/// Uniform-ish random proper rotation from the QR factor of a Gaussian matrix.
inline Mat random_rotation(int d, Rng& rng) {
    if (d == 1) return Mat::Identity(1, 1);
    if (d == 2) return rotation2(rng.uniform(0.0, 2.0 * std::numbers::pi));
    Mat g(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Mat> qr(g);
    Mat q = qr.householderQ();
    if (q.determinant() < 0) q.col(0) *= -1.0;
    return q;
}

/// Applies y -> (R q_i + t, R p_i) node by node.
inline PhaseState rigid_motion(const PhaseState& s, const Mat& r, const Vec& t) {
    const int d = static_cast<int>(r.rows());
    PhaseState out = s;
    const auto n = s.q.size() / d;
    for (Eigen::Index i = 0; i < n; ++i) {
        out.q.segment(i * d, d) = r * s.q.segment(i * d, d) + t;
        out.p.segment(i * d, d) = r * s.p.segment(i * d, d);
    }
    return out;
}

/// Node i of the result is node perm[i] of the input.
inline PhaseState permute_nodes(const PhaseState& s, const std::vector<int>& perm, int d) {
    PhaseState out = s;
    for (std::size_t i = 0; i < perm.size(); ++i) {
        out.q.segment(static_cast<Eigen::Index>(i) * d, d) = s.q.segment(perm[i] * d, d);
        out.p.segment(static_cast<Eigen::Index>(i) * d, d) = s.p.segment(perm[i] * d, d);
    }
    return out;
}

/// Edges of `topo` expressed in the labels of permute_nodes(.., perm, ..).
inline GraphTopology permute_topology(const GraphTopology& topo, const std::vector<int>& perm) {
    std::vector<int> inv(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = static_cast<int>(i);
    std::vector<Edge> edges;
    for (const auto& e : topo.edges()) edges.push_back({inv[e.hi], inv[e.lo]});
    return GraphTopology::custom(topo.n_nodes(), topo.dim(), edges);
}

inline double naive_softplus(double x) { return std::log(1.0 + std::exp(x)); }

/// Straight loop implementation of the network on given invariant
/// coordinates; independent of the library's matrix code.
inline double naive_network(const ModelParams& p, const GraphTopology& topo, const Vec& q_bar, const Vec& p_bar) {
    const int d = topo.dim();
    const int n = topo.n_nodes();
    const int d_h = p.dims.d_h;
    const int d_m = p.dims.d_m;
    auto dense = [](const LayerParams& l, const std::vector<double>& x) {
        std::vector<double> y(static_cast<std::size_t>(l.weight.rows()));
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
            double acc = l.bias[r];
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) acc += l.weight(r, c) * x[static_cast<std::size_t>(c)];
            y[static_cast<std::size_t>(r)] = naive_softplus(acc);
        }
        return y;
    };
    std::vector<std::vector<double>> hv(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::vector<double> v;
        for (int a = 0; a < d; ++a) v.push_back(q_bar[i * d + a]);
        for (int a = 0; a < d; ++a) v.push_back(p_bar[i * d + a]);
        hv[static_cast<std::size_t>(i)] = dense(p.node_enc, v);
    }
    std::vector<std::vector<double>> m(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(d_m)));
    auto edge_encoding = [&](int i, int j) {
        std::vector<double> ef;
        double len2 = 0.0;
        for (int a = 0; a < d; ++a) {
            const double diff = q_bar[i * d + a] - q_bar[j * d + a];
            ef.push_back(diff);
            len2 += diff * diff;
        }
        ef.push_back(std::sqrt(len2));
        return dense(p.edge_enc, ef);
    };
    const bool directed = p.invariance.edge_mode == EdgeMode::directed;
    for (const auto& e : topo.edges()) {
        for (int dir = 0; dir < 2; ++dir) {
            const int src = dir == 0 ? e.hi : e.lo;
            const int dst = dir == 0 ? e.lo : e.hi;
            // Shared mode always orients the edge from hi to lo.
            const auto he = directed ? edge_encoding(src, dst) : edge_encoding(e.hi, e.lo);
            std::vector<double> in = hv[static_cast<std::size_t>(src)];
            in.insert(in.end(), he.begin(), he.end());
            const auto msg = dense(p.msg_enc, in);
            for (int k = 0; k < d_m; ++k) m[static_cast<std::size_t>(dst)][static_cast<std::size_t>(k)] += msg[static_cast<std::size_t>(k)];
        }
    }
    double h = p.readout_b;
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < d_h; ++k) h += p.readout_w[k] * hv[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        for (int k = 0; k < d_m; ++k) h += p.readout_w[d_h + k] * m[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    }
    return h;
}

/// Invariant coordinates B^T (q - mean), B^T p for a fixed basis B.
inline void encode_with_basis(const PhaseState& s, int d, const Mat& basis, Vec& q_bar, Vec& p_bar) {
    const auto n = s.q.size() / d;
    Vec mean = Vec::Zero(d);
    for (Eigen::Index i = 0; i < n; ++i) mean += s.q.segment(i * d, d);
    mean /= static_cast<double>(n);
    q_bar.resize(s.q.size());
    p_bar.resize(s.p.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        q_bar.segment(i * d, d) = basis.transpose() * (s.q.segment(i * d, d) - mean);
        p_bar.segment(i * d, d) = basis.transpose() * s.p.segment(i * d, d);
    }
}

/// Relative error of `a` against `b`, scaled by the largest entry of either.
inline double max_rel(const Vec& a, const Vec& b) {
    const double scale = std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), 1e-300});
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace testutil
