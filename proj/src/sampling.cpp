#include "rfhgn/sampling.hpp"

#include <algorithm>
#include <sstream>

namespace rfhgn {

const char* to_string(SamplerMethod m) {
    return m == SamplerMethod::elm ? "elm" : "swim";
}

SamplerMethod sampler_method_from_string(const std::string& name) {
    if (name == "elm") return SamplerMethod::elm;
    if (name == "swim") return SamplerMethod::swim;
    throw std::invalid_argument("unknown sampler method: " + name);
}

void SamplerConfig::validate() const {
    if (!std::isfinite(s1) || !std::isfinite(s2)) throw std::invalid_argument("SWIM constants must be finite");
    if (!(elm_bias_low <= elm_bias_high)) throw std::invalid_argument("ELM bias bounds must satisfy low <= high");
    if (max_retries < 1) throw std::invalid_argument("max_retries must be >= 1");
    if (pool_cap < 2) throw std::invalid_argument("pool_cap must be >= 2");
}

LayerParams sample_elm(int in_dim, int out_dim, const SamplerConfig& cfg, Rng& rng) {
    if (in_dim < 1 || out_dim < 1) throw std::invalid_argument("layer dimensions must be positive");
    LayerParams layer;
    layer.weight.resize(out_dim, in_dim);
    for (int r = 0; r < out_dim; ++r) {
        for (int c = 0; c < in_dim; ++c) layer.weight(r, c) = rng.normal();
    }
    layer.bias.resize(out_dim);
    for (int r = 0; r < out_dim; ++r) layer.bias[r] = rng.uniform(cfg.elm_bias_low, cfg.elm_bias_high);
    return layer;
}

LayerParams sample_swim(const Mat& inputs, int out_dim, const SamplerConfig& cfg, Rng& rng) {
    if (out_dim < 1) throw std::invalid_argument("layer width must be positive");
    const auto n = static_cast<std::size_t>(inputs.rows());
    bool has_distinct = false;
    for (Eigen::Index r = 1; r < inputs.rows() && !has_distinct; ++r) {
        has_distinct = inputs.row(r) != inputs.row(0);
    }
    if (!has_distinct) {
        throw SamplingError(SamplingError::Kind::too_few_distinct,
                            "SWIM needs at least 2 distinct input points, got " + std::to_string(n) +
                                " point(s) that are all identical");
    }
    constexpr double kDuplicateTol = 1e-12;
    LayerParams layer;
    layer.weight.resize(out_dim, inputs.cols());
    layer.bias.resize(out_dim);
    for (int neuron = 0; neuron < out_dim; ++neuron) {
        int draws = 0;
        while (true) {
            ++draws;
            const auto i = static_cast<Eigen::Index>(rng.index(n));
            const auto j = static_cast<Eigen::Index>(rng.index(n));
            const Eigen::RowVectorXd diff = inputs.row(j) - inputs.row(i);
            const double sq = diff.squaredNorm();
            if (std::sqrt(sq) >= kDuplicateTol) {
                layer.weight.row(neuron) = cfg.s1 * diff / sq;
                layer.bias[neuron] = -layer.weight.row(neuron).dot(inputs.row(i)) - cfg.s2;
                break;
            }
            if (!cfg.resample_duplicates) {
                // Without resampling a coincident pair gives a constant neuron.
                layer.weight.row(neuron).setZero();
                layer.bias[neuron] = -cfg.s2;
                break;
            }
            if (draws >= cfg.max_retries) {
                std::ostringstream msg;
                msg << "SWIM neuron " << neuron << ": " << draws << " consecutive duplicate pairs among " << n
                    << " points (duplicate-pair density close to 1)";
                throw SamplingError(SamplingError::Kind::duplicate_retries_exhausted, msg.str());
            }
        }
    }
    return layer;
}

namespace {

/// Sorted subset of [0, total) of size min(total, cap), uniform without
/// replacement.
std::vector<std::size_t> pool_indices(std::size_t total, std::size_t cap, Rng& rng) {
    std::vector<std::size_t> idx(total);
    for (std::size_t i = 0; i < total; ++i) idx[i] = i;
    if (total <= cap) return idx;
    for (std::size_t i = 0; i < cap; ++i) std::swap(idx[i], idx[i + rng.index(total - i)]);
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
    return idx;
}

Mat encode(const LayerParams& layer, const Mat& x) {
    Mat pre = x * layer.weight.transpose();
    pre.rowwise() += layer.bias.transpose();
    return pre.unaryExpr([](double v) { return softplus(v); });
}

/// Gathers rows of per-sample blocks (each `per_sample` rows) at the global
/// positions listed in `keep`.
template <class BlockFn>
Mat gather_pool(const Dataset& ds, std::size_t per_sample, int cols, const std::vector<std::size_t>& keep,
                BlockFn&& block_of) {
    Mat pool(static_cast<Eigen::Index>(keep.size()), cols);
    std::size_t next = 0;
    for (std::size_t s = 0; s < ds.samples.size() && next < keep.size(); ++s) {
        const std::size_t begin = s * per_sample;
        if (keep[next] >= begin + per_sample) continue;
        const Mat block = block_of(ds.samples[s].state);
        while (next < keep.size() && keep[next] < begin + per_sample) {
            pool.row(static_cast<Eigen::Index>(next)) = block.row(static_cast<Eigen::Index>(keep[next] - begin));
            ++next;
        }
    }
    return pool;
}

}  // namespace

ModelParams build_random_layers(const ModelDims& dims, const Dataset& dataset, const SamplerConfig& cfg, Rng& rng,
                                const InvarianceConfig& inv) {
    cfg.validate();
    if (dims.d_m < 1) throw std::invalid_argument("d_M must be >= 1");
    ModelParams params;
    params.dims = dims;
    params.invariance = inv;
    if (cfg.method == SamplerMethod::elm) {
        params.node_enc = sample_elm(dims.d_v(), dims.d_h, cfg, rng);
        params.edge_enc = sample_elm(dims.d_e(), dims.d_h, cfg, rng);
        params.msg_enc = sample_elm(2 * dims.d_h, dims.d_m, cfg, rng);
        return params;
    }

    const auto& topo = dataset.topology;
    if (topo.dim() != dims.dim) throw std::invalid_argument("dataset dimension does not match model dims");
    if (dataset.samples.empty()) throw std::invalid_argument("SWIM sampling needs a non-empty dataset");
    const auto n_nodes = static_cast<std::size_t>(topo.n_nodes());
    const auto n_edges = topo.n_edges();
    const EdgeMode mode = inv.edge_mode;
    const auto edge_rows = static_cast<std::size_t>(edge_feature_rows(topo, mode));
    const std::size_t m = dataset.samples.size();

    auto invariant = [&](const PhaseState& s) { return encode_invariant(s, topo, inv); };

    const auto node_keep = pool_indices(m * n_nodes, cfg.pool_cap, rng);
    const Mat node_pool = gather_pool(dataset, n_nodes, dims.d_v(), node_keep,
                                      [&](const PhaseState& s) { return node_features(invariant(s), dims.dim); });
    params.node_enc = sample_swim(node_pool, dims.d_h, cfg, rng);

    if (n_edges == 0) throw std::invalid_argument("SWIM sampling needs a graph with at least one edge");
    const auto edge_keep = pool_indices(m * edge_rows, cfg.pool_cap, rng);
    const Mat edge_pool = gather_pool(dataset, edge_rows, dims.d_e(), edge_keep,
                                      [&](const PhaseState& s) { return edge_features(invariant(s), topo, mode); });
    params.edge_enc = sample_swim(edge_pool, dims.d_h, cfg, rng);

    // Message inputs [h_src; h_edge], one row per direction in edge order.
    const auto& edges = topo.edges();
    auto message_inputs = [&](const PhaseState& s) {
        const auto iv = invariant(s);
        const Mat h_v = encode(params.node_enc, node_features(iv, dims.dim));
        const Mat h_e = encode(params.edge_enc, edge_features(iv, topo, mode));
        Mat x(static_cast<Eigen::Index>(2 * n_edges), 2 * dims.d_h);
        for (std::size_t k = 0; k < n_edges; ++k) {
            const auto row = static_cast<Eigen::Index>(2 * k);
            x.row(row) << h_v.row(edges[k].hi), h_e.row(edge_row_of_message(row, mode));
            x.row(row + 1) << h_v.row(edges[k].lo), h_e.row(edge_row_of_message(row + 1, mode));
        }
        return x;
    };
    const auto msg_keep = pool_indices(m * 2 * n_edges, cfg.pool_cap, rng);
    const Mat msg_pool = gather_pool(dataset, 2 * n_edges, 2 * dims.d_h, msg_keep, message_inputs);
    params.msg_enc = sample_swim(msg_pool, dims.d_m, cfg, rng);
    return params;
}

}  // namespace rfhgn
