#pragma once

#include "rfhgn/core.hpp"
#include "rfhgn/kernels.hpp"
#include "rfhgn/network.hpp"

#include <map>
#include <string>

namespace rfhgn {

/// Mean of squared entry differences.
double mse(const Vec& pred, const Vec& truth);
/// |truth - pred|_2 / |truth|_2; throws std::domain_error for a zero truth.
double relative_error(const Vec& pred, const Vec& truth);

struct Metrics {
    double mse = 0.0;
    double relative_error = 0.0;
    double energy_drift = 0.0;
    std::map<std::string, double> wall_times;
};

struct DynamicsEval {
    double mse = 0.0;
    double relative_error = 0.0;
    std::size_t samples = 0;
    double eval_seconds = 0.0;
};

/// Compares the model dynamics J model_gradient with the stored y_dot over all samples,
/// pooling every entry of every sample.
DynamicsEval evaluate_dynamics(const ModelParams& params, const Dataset& dataset,
                               ExecPolicy policy = ExecPolicy::parallel);

}  // namespace rfhgn
