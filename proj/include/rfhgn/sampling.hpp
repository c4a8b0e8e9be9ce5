#pragma once

#include "rfhgn/core.hpp"
#include "rfhgn/network.hpp"
#include "rfhgn/rng.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rfhgn {

enum class SamplerMethod { elm, swim };

const char* to_string(SamplerMethod m);
SamplerMethod sampler_method_from_string(const std::string& name);

struct SamplerConfig {
    SamplerMethod method = SamplerMethod::swim;
    /// SWIM scale and shift: w = s1 (x2 - x1) / |x2 - x1|^2, b = -<w, x1> - s2.
    double s1 = 1.0;
    double s2 = 0.0;
    double elm_bias_low = -1.0;
    double elm_bias_high = 1.0;
    bool resample_duplicates = true;
    /// Redraws allowed per neuron when a drawn pair coincides.
    int max_retries = 100;
    /// Pooled SWIM candidates above this count are uniformly subsampled.
    std::size_t pool_cap = 100000;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

class SamplingError : public std::runtime_error {
public:
    enum class Kind { too_few_distinct, duplicate_retries_exhausted };
    SamplingError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Data-agnostic layer: weights ~ N(0, 1), biases ~ U(bias_low, bias_high).
LayerParams sample_elm(int in_dim, int out_dim, const SamplerConfig& cfg, Rng& rng);

/// Data-driven layer: each neuron from a random pair of rows of `inputs`.
LayerParams sample_swim(const Mat& inputs, int out_dim, const SamplerConfig& cfg, Rng& rng);

/// Samples node, edge and message encoders. SWIM pools the encoder inputs
/// over every node / edge / message direction of every sample; the message
/// pool is built with the already sampled node and edge encoders. The
/// readout of the returned model is empty.
ModelParams build_random_layers(const ModelDims& dims, const Dataset& dataset, const SamplerConfig& cfg, Rng& rng,
                                const InvarianceConfig& inv = {});

}  // namespace rfhgn
