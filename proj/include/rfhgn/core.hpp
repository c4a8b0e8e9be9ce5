#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace rfhgn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Precision { double_precision, single_precision };

enum class GraphKind { chain, ring, lattice, custom };

const char* to_string(GraphKind kind);
GraphKind graph_kind_from_string(const std::string& name);

/// Undirected edge in canonical orientation: `hi > lo`.
struct Edge {
    int hi = 0;
    int lo = 0;

    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Fixed graph connectivity. Each stored edge stands for both directions, so
/// the implied adjacency matrix is symmetric.
class GraphTopology {
public:
    GraphTopology() = default;

    static GraphTopology chain(int n_nodes, int dim);
    static GraphTopology ring(int n_nodes, int dim);
    /// Nodes on an nx-by-ny grid, node (r, c) has index r * ny + c.
    static GraphTopology lattice(int nx, int ny, int dim);
    /// Arbitrary edges; pairs are re-oriented to hi > lo, duplicates and
    /// self-loops are rejected.
    static GraphTopology custom(int n_nodes, int dim, const std::vector<Edge>& edges);

    int n_nodes() const { return n_nodes_; }
    int dim() const { return dim_; }
    GraphKind kind() const { return kind_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    const std::vector<Edge>& edges() const { return edges_; }
    std::size_t n_edges() const { return edges_.size(); }
    /// Length of q (and of p): dim * n_nodes.
    int coord_size() const { return dim_ * n_nodes_; }

    friend bool operator==(const GraphTopology&, const GraphTopology&) = default;

private:
    GraphTopology(GraphKind kind, int n_nodes, int dim, std::vector<Edge> edges, int nx = 0, int ny = 0);

    GraphKind kind_ = GraphKind::custom;
    int n_nodes_ = 0;
    int dim_ = 0;
    int nx_ = 0;
    int ny_ = 0;
    std::vector<Edge> edges_;
};

/// Positions and momenta, node-major: the d components of node i occupy
/// entries [d*i, d*i + d).
struct PhaseState {
    Vec q;
    Vec p;

    PhaseState() = default;
    PhaseState(Vec q_in, Vec p_in) : q(std::move(q_in)), p(std::move(p_in)) {}
    static PhaseState zeros(int coord_size);

    /// y = [q; p]
    Vec flat() const;
    static PhaseState from_flat(const Eigen::Ref<const Vec>& y);

    bool all_finite() const;
};

/// (n_nodes x dim) view of a node-major coordinate vector.
inline Eigen::Map<const RowMat> shaped(const Vec& coords, int dim) {
    return {coords.data(), coords.size() / dim, dim};
}
inline Eigen::Map<RowMat> shaped(Vec& coords, int dim) {
    return {coords.data(), coords.size() / dim, dim};
}
inline Vec flattened(const RowMat& nodes) {
    return Eigen::Map<const Vec>(nodes.data(), nodes.size());
}

struct Sample {
    PhaseState state;
    /// Time derivative (q_dot, p_dot), same layout as `state`.
    std::optional<PhaseState> deriv;
};

/// Single state with a known Hamiltonian value; pins the additive constant of
/// the learned Hamiltonian.
struct Anchor {
    PhaseState state;
    double h0 = 0.0;
};

struct Dataset {
    GraphTopology topology;
    std::vector<Sample> samples;
    Anchor anchor;
};

struct Violation {
    std::optional<std::size_t> sample;
    std::string message;
};

std::vector<Violation> validate_dataset(const Dataset& ds);

/// J g for g = [dH/dq; dH/dp] with J = [[0, I], [-I, 0]]: returns [dH/dp; -dH/dq].
Vec apply_symplectic(const Vec& grad);
/// J^{-1} y_dot = -J y_dot: returns [-p_dot; q_dot].
Vec apply_symplectic_inverse(const Vec& y_dot);

}  // namespace rfhgn
