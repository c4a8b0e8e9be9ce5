#include "rfhgn/metrics.hpp"

#include <chrono>
#include <stdexcept>

namespace rfhgn {

double mse(const Vec& pred, const Vec& truth) {
    if (pred.size() != truth.size()) throw std::invalid_argument("mse: length mismatch");
    if (pred.size() == 0) return 0.0;
    return (pred - truth).squaredNorm() / static_cast<double>(pred.size());
}

double relative_error(const Vec& pred, const Vec& truth) {
    if (pred.size() != truth.size()) throw std::invalid_argument("relative_error: length mismatch");
    const double denom = truth.norm();
    if (denom == 0.0) throw std::domain_error("relative_error: reference vector has zero norm");
    return (truth - pred).norm() / denom;
}

DynamicsEval evaluate_dynamics(const ModelParams& params, const Dataset& dataset, ExecPolicy policy) {
    const auto start = std::chrono::steady_clock::now();
    const Mat grads = batch_gradients(params, dataset.topology, dataset.samples, policy);
    const Eigen::Index block = grads.rows();
    Vec pred(block * grads.cols());
    Vec truth(block * grads.cols());
    for (Eigen::Index k = 0; k < grads.cols(); ++k) {
        const auto& s = dataset.samples[static_cast<std::size_t>(k)];
        if (!s.deriv) throw std::invalid_argument("sample " + std::to_string(k) + " has no time derivative");
        pred.segment(k * block, block) = apply_symplectic(grads.col(k));
        truth.segment(k * block, block) = s.deriv->flat();
    }
    DynamicsEval out;
    out.samples = dataset.samples.size();
    out.mse = mse(pred, truth);
    out.relative_error = relative_error(pred, truth);
    out.eval_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

}  // namespace rfhgn
