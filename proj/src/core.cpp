#include "rfhgn/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace rfhgn {

const char* to_string(GraphKind kind) {
    switch (kind) {
        case GraphKind::chain: return "chain";
        case GraphKind::ring: return "ring";
        case GraphKind::lattice: return "lattice";
        case GraphKind::custom: return "custom";
    }
    return "custom";
}

GraphKind graph_kind_from_string(const std::string& name) {
    if (name == "chain") return GraphKind::chain;
    if (name == "ring") return GraphKind::ring;
    if (name == "lattice") return GraphKind::lattice;
    if (name == "custom") return GraphKind::custom;
    throw std::invalid_argument("unknown graph kind: " + name);
}

namespace {

void check_dims(int n_nodes, int dim) {
    if (n_nodes <= 0) throw std::invalid_argument("graph must have at least one node");
    if (dim < 1 || dim > 3) {
        throw std::invalid_argument("spatial dimension must be 1, 2 or 3, got " + std::to_string(dim));
    }
}

}  // namespace

GraphTopology::GraphTopology(GraphKind kind, int n_nodes, int dim, std::vector<Edge> edges, int nx, int ny)
    : kind_(kind), n_nodes_(n_nodes), dim_(dim), nx_(nx), ny_(ny), edges_(std::move(edges)) {}

GraphTopology GraphTopology::chain(int n_nodes, int dim) {
    check_dims(n_nodes, dim);
    std::vector<Edge> edges;
    edges.reserve(n_nodes > 0 ? n_nodes - 1 : 0);
    for (int i = 1; i < n_nodes; ++i) edges.push_back({i, i - 1});
    return {GraphKind::chain, n_nodes, dim, std::move(edges)};
}

GraphTopology GraphTopology::ring(int n_nodes, int dim) {
    check_dims(n_nodes, dim);
    if (n_nodes < 3) throw std::invalid_argument("ring needs at least 3 nodes");
    std::vector<Edge> edges;
    edges.reserve(n_nodes);
    for (int i = 1; i < n_nodes; ++i) edges.push_back({i, i - 1});
    edges.push_back({n_nodes - 1, 0});
    return {GraphKind::ring, n_nodes, dim, std::move(edges)};
}

GraphTopology GraphTopology::lattice(int nx, int ny, int dim) {
    if (nx < 1 || ny < 1) throw std::invalid_argument("lattice sizes must be >= 1");
    check_dims(nx * ny, dim);
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(nx * (ny - 1) + ny * (nx - 1)));
    for (int r = 0; r < nx; ++r) {
        for (int c = 0; c < ny; ++c) {
            const int n = r * ny + c;
            if (c > 0) edges.push_back({n, n - 1});
            if (r > 0) edges.push_back({n, n - ny});
        }
    }
    return {GraphKind::lattice, nx * ny, dim, std::move(edges), nx, ny};
}

GraphTopology GraphTopology::custom(int n_nodes, int dim, const std::vector<Edge>& edges) {
    check_dims(n_nodes, dim);
    std::vector<Edge> canon;
    canon.reserve(edges.size());
    std::set<std::pair<int, int>> seen;
    for (const auto& e : edges) {
        const int hi = std::max(e.hi, e.lo);
        const int lo = std::min(e.hi, e.lo);
        if (hi == lo) throw std::invalid_argument("self-loop on node " + std::to_string(hi));
        if (lo < 0 || hi >= n_nodes) throw std::invalid_argument("edge index out of range");
        if (!seen.insert({hi, lo}).second) {
            throw std::invalid_argument("duplicate edge (" + std::to_string(hi) + "," + std::to_string(lo) + ")");
        }
        canon.push_back({hi, lo});
    }
    return {GraphKind::custom, n_nodes, dim, std::move(canon)};
}

PhaseState PhaseState::zeros(int coord_size) {
    return {Vec::Zero(coord_size), Vec::Zero(coord_size)};
}

Vec PhaseState::flat() const {
    Vec y(q.size() + p.size());
    y << q, p;
    return y;
}

PhaseState PhaseState::from_flat(const Eigen::Ref<const Vec>& y) {
    if (y.size() % 2 != 0) throw std::invalid_argument("flat phase vector must have even length");
    const auto half = y.size() / 2;
    return {y.head(half), y.tail(half)};
}

bool PhaseState::all_finite() const {
    return q.allFinite() && p.allFinite();
}

std::vector<Violation> validate_dataset(const Dataset& ds) {
    std::vector<Violation> out;
    const auto& topo = ds.topology;
    const Eigen::Index size = topo.coord_size();
    if (size == 0) {
        out.push_back({std::nullopt, "topology is empty"});
        return out;
    }
    for (const auto& e : topo.edges()) {
        if (!(0 <= e.lo && e.lo < e.hi && e.hi < topo.n_nodes())) {
            out.push_back({std::nullopt, "edge violates 0 <= lo < hi < N"});
        }
    }
    for (std::size_t k = 0; k < ds.samples.size(); ++k) {
        const auto& s = ds.samples[k];
        if (s.state.q.size() != size || s.state.p.size() != size) {
            std::ostringstream msg;
            msg << "sample " << k << ": state length " << s.state.q.size() << "/" << s.state.p.size()
                << " does not match d*N = " << size;
            out.push_back({k, msg.str()});
            continue;
        }
        if (!s.state.all_finite()) {
            out.push_back({k, "sample " + std::to_string(k) + ": non-finite position or momentum"});
        }
        if (s.deriv) {
            if (s.deriv->q.size() != size || s.deriv->p.size() != size) {
                out.push_back({k, "sample " + std::to_string(k) + ": derivative length differs from state"});
            } else if (!s.deriv->all_finite()) {
                out.push_back({k, "sample " + std::to_string(k) + ": non-finite derivative"});
            }
        }
    }
    const auto& a = ds.anchor;
    if (a.state.q.size() != size || a.state.p.size() != size) {
        out.push_back({std::nullopt, "anchor state length does not match d*N"});
    } else if (!a.state.all_finite()) {
        out.push_back({std::nullopt, "anchor state is not finite"});
    }
    if (!std::isfinite(a.h0)) out.push_back({std::nullopt, "anchor Hamiltonian value is not finite"});
    return out;
}

Vec apply_symplectic(const Vec& grad) {
    const auto half = grad.size() / 2;
    Vec out(grad.size());
    out.head(half) = grad.tail(half);
    out.tail(half) = -grad.head(half);
    return out;
}

Vec apply_symplectic_inverse(const Vec& y_dot) {
    const auto half = y_dot.size() / 2;
    Vec out(y_dot.size());
    out.head(half) = -y_dot.tail(half);
    out.tail(half) = y_dot.head(half);
    return out;
}

}  // namespace rfhgn
