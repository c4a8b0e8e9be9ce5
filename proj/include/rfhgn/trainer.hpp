#pragma once

#include "rfhgn/kernels.hpp"
#include "rfhgn/network.hpp"
#include "rfhgn/physics.hpp"
#include "rfhgn/sampling.hpp"

#include <string>
#include <vector>

namespace rfhgn {

/// Gradient-matching system for the readout [W_L; b_L]: sample k owns rows
/// [k*2dN, (k+1)*2dN) holding dPhi/dy (q rows first, then p rows) against
/// targets J^{-1} y_dot = [-p_dot; q_dot]. The last row is [Phi(y0), 1] = H(y0).
struct LinearSystem {
    Mat z;
    Vec u;
};

LinearSystem assemble_system(const ModelParams& params, const Dataset& dataset,
                             ExecPolicy policy = ExecPolicy::parallel);

enum class SolveMethod {
    /// Truncated SVD (rcond relative cutoff), Z materialized.
    svd,
    /// Streaming Z^T Z accumulation, eigenvalue cutoff at rcond^2 relative.
    normal_equations,
    /// Tikhonov: min |Z theta - u|^2 + lambda |theta|^2.
    ridge,
};

const char* to_string(SolveMethod m);
SolveMethod solve_method_from_string(const std::string& name);

struct SolverOptions {
    double rcond = 1e-6;
    SolveMethod method = SolveMethod::svd;
    double ridge_lambda = 0.0;
    /// Samples per block in the streaming mode.
    std::size_t block_samples = 256;
    ExecPolicy policy = ExecPolicy::parallel;
};

struct LstsqSolution {
    Vec theta;
    int effective_rank = 0;
    /// Z was identically zero; theta is zero.
    bool zero_matrix = false;
    double residual_norm = 0.0;
};

LstsqSolution solve_least_squares(const LinearSystem& sys, double rcond);
LstsqSolution solve_least_squares(const LinearSystem& sys, const SolverOptions& opts);

struct NormalEquations {
    Mat gram;        // Z^T Z
    Vec rhs;         // Z^T u
    double u_sq = 0; // u^T u
    Eigen::Index rows = 0;
};

NormalEquations accumulate_normal_equations(const ModelParams& params, const Dataset& dataset,
                                            std::size_t block_samples, ExecPolicy policy);
LstsqSolution solve_normal_equations(const NormalEquations& ne, double rcond);

struct TrainReport {
    double wall_time_seconds = 0.0;
    double sampling_seconds = 0.0;
    double assembly_seconds = 0.0;
    double solve_seconds = 0.0;
    double residual_norm = 0.0;
    /// Mean squared error of the model dynamics against y_dot over the training samples.
    double train_mse = 0.0;
    int effective_rank = 0;
    bool zero_matrix = false;
};

struct TrainResult {
    ModelParams params;
    TrainReport report;
};

/// Samples the encoders, assembles the gradient system and solves for the readout.
TrainResult train(const Dataset& dataset, const ModelDims& dims, const SamplerConfig& sampler,
                  const SolverOptions& solver, Rng& rng, const InvarianceConfig& invariance = {});
/// Same, with the random stream taken from sampler.rng_seed.
TrainResult train(const Dataset& dataset, const ModelDims& dims, const SamplerConfig& sampler,
                  const SolverOptions& solver = {});

/// Central-difference derivatives at interior states of a uniformly sampled
/// trajectory; the two endpoints are dropped.
std::vector<Sample> derivatives_from_trajectory(const Trajectory& traj);

/// Adapter so a trained network can drive the integrator.
class LearnedHamiltonian final : public HamiltonianModel {
public:
    LearnedHamiltonian(ModelParams params, GraphTopology topo);
    double energy(const PhaseState& state) const override;
    Vec gradient(const PhaseState& state) const override;

private:
    ModelParams params_;
    GraphTopology topo_;
};

}  // namespace rfhgn
