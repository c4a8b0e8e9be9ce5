#include "rfhgn/invariance.hpp"

#include "rfhgn/detail/basis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rfhgn {

const char* to_string(FrameGradient mode) {
    return mode == FrameGradient::exact ? "exact" : "frozen";
}

FrameGradient frame_gradient_from_string(const std::string& name) {
    if (name == "exact") return FrameGradient::exact;
    if (name == "frozen") return FrameGradient::frozen;
    throw std::invalid_argument("unknown frame gradient mode: " + name);
}

const char* to_string(EdgeMode mode) {
    return mode == EdgeMode::shared ? "shared" : "directed";
}

EdgeMode edge_mode_from_string(const std::string& name) {
    if (name == "shared") return EdgeMode::shared;
    if (name == "directed") return EdgeMode::directed;
    throw std::invalid_argument("unknown edge mode: " + name);
}

CenteredPositions center_positions(const PhaseState& state, const GraphTopology& topo) {
    const int d = topo.dim();
    const int n = topo.n_nodes();
    if (state.q.size() != topo.coord_size()) throw std::invalid_argument("state size does not match topology");
    CenteredPositions out;
    out.mean = shaped(state.q, d).colwise().mean().transpose();
    out.q = state.q;
    auto nodes = shaped(out.q, d);
    for (int i = 0; i < n; ++i) nodes.row(i) -= out.mean.transpose();
    return out;
}

namespace {

constexpr double kAngleTieTol = 1e-12;

struct Candidate {
    int index;
    double norm;
    double polar;   // atan2(y, x) in [0, 2pi)
    double second;  // angle to the second axis (d = 3)
};

bool ranks_before(const Candidate& a, const Candidate& b, int dim) {
    const double norm_tol = 1e-12 * std::max(1.0, std::max(a.norm, b.norm));
    if (std::abs(a.norm - b.norm) > norm_tol) return a.norm < b.norm;
    if (std::abs(a.polar - b.polar) > kAngleTieTol) return a.polar < b.polar;
    if (dim == 3 && std::abs(a.second - b.second) > kAngleTieTol) return a.second < b.second;
    return a.index < b.index;
}

}  // namespace

std::vector<int> select_reference(const Vec& centered_q, int dim, double eps_deg) {
    if (dim <= 1) return {};
    const auto nodes = shaped(centered_q, dim);
    std::vector<Candidate> pool;
    pool.reserve(static_cast<std::size_t>(nodes.rows()));
    for (int i = 0; i < nodes.rows(); ++i) {
        const double norm = nodes.row(i).norm();
        if (norm < eps_deg) continue;
        double polar = std::atan2(nodes(i, 1), nodes(i, 0));
        if (polar < 0.0) polar += 2.0 * std::numbers::pi;
        const double second = dim == 3 ? std::acos(std::clamp(nodes(i, 1) / norm, -1.0, 1.0)) : 0.0;
        pool.push_back({i, norm, polar, second});
    }
    const std::size_t wanted = dim == 2 ? 1 : 2;
    std::vector<int> refs;
    for (std::size_t pick = 0; pick < wanted && !pool.empty(); ++pick) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < pool.size(); ++k) {
            if (ranks_before(pool[k], pool[best], dim)) best = k;
        }
        refs.push_back(pool[best].index);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(best));
    }
    return refs;
}

InvariantFrame build_basis(const Vec& centered_q, const std::vector<int>& refs, int dim, const InvarianceConfig& cfg) {
    InvariantFrame frame;
    frame.ref_indices = refs;
    frame.basis = Mat::Identity(dim, dim);
    if (dim == 1) return frame;

    const auto nodes = shaped(centered_q, dim);
    std::vector<int> usable;
    for (int r : refs) {
        if (r < 0 || r >= nodes.rows()) throw std::out_of_range("reference index out of range");
        if (nodes.row(r).norm() >= cfg.eps_deg) usable.push_back(r);
    }
    if (usable.empty()) {
        frame.degenerate = true;
        frame.ref_indices.clear();
        return frame;
    }
    frame.ref_indices = usable;
    const double* r1 = &centered_q[dim * usable[0]];
    const double* r2 = usable.size() > 1 ? &centered_q[dim * usable[1]] : nullptr;
    const auto res = detail::basis_from_refs<double>(dim, r1, r2, cfg.eps_colinear, cfg.eps_deg);
    for (int c = 0; c < dim; ++c) {
        for (int r = 0; r < dim; ++r) frame.basis(r, c) = res.e[c][r];
    }
    frame.colinear_branch = res.colinear;
    frame.axis_fallback = res.axis_fallback;
    return frame;
}

InvariantState encode_invariant(const PhaseState& state, const GraphTopology& topo, const InvarianceConfig& cfg) {
    const int d = topo.dim();
    auto centered = center_positions(state, topo);
    const auto refs = select_reference(centered.q, d, cfg.eps_deg);
    InvariantState out;
    out.frame = build_basis(centered.q, refs, d, cfg);
    out.frame.mean_q = centered.mean;

    const Mat& basis = out.frame.basis;
    out.q_bar.resize(centered.q.size());
    out.p_bar.resize(state.p.size());
    // Row i of the result is (B^T c_i)^T = c_i^T B.
    shaped(out.q_bar, d) = shaped(centered.q, d) * basis;
    shaped(out.p_bar, d) = shaped(state.p, d) * basis;
    return out;
}

}  // namespace rfhgn
