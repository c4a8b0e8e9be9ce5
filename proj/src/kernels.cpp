#include "rfhgn/kernels.hpp"

#include "rfhgn/gradients.hpp"

#include <exception>
#include <mutex>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rfhgn {

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace {

/// Runs body(k) for k in [0, n); exceptions thrown inside the parallel region
/// are captured and the first one is rethrown after the loop.
template <class Body>
void for_each_sample(std::size_t n, ExecPolicy policy, Body&& body) {
    const auto count = static_cast<std::ptrdiff_t>(n);
    if (policy == ExecPolicy::serial) {
        for (std::ptrdiff_t k = 0; k < count; ++k) body(k);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t k = 0; k < count; ++k) {
        try {
            body(k);
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace

void fill_jacobian_rows(const ModelParams& params, const GraphTopology& topo, std::span<const Sample> samples,
                        Eigen::Ref<Mat> out, ExecPolicy policy) {
    params.validate_for(topo, false);
    const Eigen::Index block = 2 * topo.coord_size();
    const int d_l = params.dims.d_l();
    if (out.rows() != block * static_cast<Eigen::Index>(samples.size()) || out.cols() < d_l) {
        throw std::invalid_argument("Jacobian output block has the wrong shape");
    }
    for_each_sample(samples.size(), policy, [&](std::ptrdiff_t k) {
        ForwardCache cache;
        Mat jac;
        const auto& state = samples[static_cast<std::size_t>(k)].state;
        forward_into(params, topo, state, cache);
        jacobian_from_cache(params, topo, state, cache, jac);
        out.block(k * block, 0, block, d_l) = jac;
    });
}

Mat batch_gradients(const ModelParams& params, const GraphTopology& topo, std::span<const Sample> samples,
                    ExecPolicy policy) {
    params.validate_for(topo, true);
    Mat out(2 * topo.coord_size(), static_cast<Eigen::Index>(samples.size()));
    for_each_sample(samples.size(), policy, [&](std::ptrdiff_t k) {
        Vec g;
        value_and_grad(params, topo, samples[static_cast<std::size_t>(k)].state, g, params.invariance.frame_gradient);
        out.col(k) = g;
    });
    return out;
}

Mat batch_global_features(const ModelParams& params, const GraphTopology& topo, std::span<const Sample> samples,
                          ExecPolicy policy) {
    params.validate_for(topo, false);
    Mat out(params.dims.d_l(), static_cast<Eigen::Index>(samples.size()));
    for_each_sample(samples.size(), policy, [&](std::ptrdiff_t k) {
        out.col(k) = global_features(params, topo, samples[static_cast<std::size_t>(k)].state);
    });
    return out;
}

Vec batch_hamiltonians(const ModelParams& params, const GraphTopology& topo, std::span<const Sample> samples,
                       ExecPolicy policy, Precision precision) {
    Vec out(static_cast<Eigen::Index>(samples.size()));
    for_each_sample(samples.size(), policy, [&](std::ptrdiff_t k) {
        out[k] = predict_hamiltonian(params, topo, samples[static_cast<std::size_t>(k)].state, precision);
    });
    return out;
}

}  // namespace rfhgn
