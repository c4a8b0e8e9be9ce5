#pragma once

#include "rfhgn/network.hpp"

#include <span>

namespace rfhgn {

/// Serial loops are the reference; parallel loops split samples across
/// OpenMP threads and write to disjoint output blocks, so both produce
/// bitwise-identical results.
enum class ExecPolicy { serial, parallel };

/// Writes the transposed input Jacobian of every sample into consecutive
/// 2dN-row blocks of `out` (columns 0..d_L-1). `out` must have
/// samples.size() * 2dN rows and at least d_L columns.
void fill_jacobian_rows(const ModelParams& params, const GraphTopology& topo, std::span<const Sample> samples,
                        Eigen::Ref<Mat> out, ExecPolicy policy);

/// Column k holds model_gradient() at samples[k].state.
Mat batch_gradients(const ModelParams& params, const GraphTopology& topo, std::span<const Sample> samples,
                    ExecPolicy policy);

/// Column k holds h_G at samples[k].state.
Mat batch_global_features(const ModelParams& params, const GraphTopology& topo, std::span<const Sample> samples,
                          ExecPolicy policy);

/// Network Hamiltonian per sample, in the requested precision.
Vec batch_hamiltonians(const ModelParams& params, const GraphTopology& topo, std::span<const Sample> samples,
                       ExecPolicy policy, Precision precision = Precision::double_precision);

int max_threads();

}  // namespace rfhgn
