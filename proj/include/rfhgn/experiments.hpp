#pragma once

#include "rfhgn/metrics.hpp"
#include "rfhgn/physics.hpp"
#include "rfhgn/sampling.hpp"
#include "rfhgn/trainer.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rfhgn {

struct SystemConfig {
    SystemKind kind = SystemKind::chain;
    /// Node count for chain and ring.
    int n = 8;
    int nx = 3;
    int ny = 3;
    int dim = 2;
    double rest_length = 1.0;
    Placement placement = Placement::rest;

    SystemSpec build() const;
    /// Same system at a different size: N for chain/ring, an s-by-s grid for
    /// lattices.
    SystemSpec build_with_size(int size) const;
    int size() const { return kind == SystemKind::lattice ? nx : n; }
};

struct DataConfig {
    std::size_t count = 4000;
    double train_fraction = 0.5;
    Range disp{-1.0, 1.0};
    Range mom{-1.0, 1.0};
};

struct IntegrationConfig {
    double dt = 1e-3;
    std::size_t steps = 5000;
    IntegratorOptions options;
};

struct ZeroShotConfig {
    std::vector<int> train_sizes{8};
    std::vector<int> test_sizes{8, 32, 128, 512};
    std::size_t test_count = 200;
    /// Test graphs above this node count are rejected before any allocation.
    int max_nodes = 1 << 16;
    std::vector<SamplerMethod> methods{SamplerMethod::swim, SamplerMethod::elm};
};

enum class AblationAxis {
    /// Width values are total readout widths d_L; d_M = d_L - d_h.
    readout,
    /// Width values are message-encoder widths d_M directly.
    message,
};

struct AblationConfig {
    std::vector<int> d_h{128, 256, 512};
    std::vector<int> widths{8, 16, 32, 64};
    AblationAxis axis = AblationAxis::message;
};

struct RunConfig {
    static constexpr int kSchemaVersion = 1;

    std::string name = "chain8";
    SystemConfig system;
    DataConfig data;
    ModelDims dims{2, 64, 448};
    InvarianceConfig invariance;
    SamplerConfig sampler;
    SolverOptions solver;
    IntegrationConfig integration;
    ZeroShotConfig zero_shot;
    AblationConfig ablation;
    std::uint64_t seed = 1;
    int n_seeds = 5;

    void validate() const;
};

/// Built-in configurations: "chain8" (2D open chain, train N=8), "lattice3x3"
/// (3D lattice), "ring" (2D closed loop with unit rest length).
RunConfig preset_config(const std::string& name);
bool is_preset(const std::string& name);

/// Data stream and model stream for one seed.
struct SeedStreams {
    std::uint64_t data_seed;
    std::uint64_t model_seed;
};
SeedStreams streams_for(std::uint64_t seed);

struct SeedRun {
    std::uint64_t seed = 0;
    TrainReport report;
    DynamicsEval test;
};

struct AccuracyResult {
    std::vector<SeedRun> runs;
    double median_mse = 0.0;
    double min_mse = 0.0;
    double max_mse = 0.0;
};

/// Generates the data for `seed` and trains one model on it.
struct TrainedRun {
    GeneratedData data;
    TrainResult trained;
};
TrainedRun train_from_config(const RunConfig& cfg, std::uint64_t seed);

/// Trains and tests with seeds cfg.seed .. cfg.seed + n_seeds - 1.
AccuracyResult run_accuracy(const RunConfig& cfg);

struct ZeroShotRow {
    std::string method;
    int train_size = 0;
    int test_size = 0;
    int test_nodes = 0;
    double relative_error = 0.0;
    double mse = 0.0;
    double eval_seconds = 0.0;
};

/// Trains once per (method, train size) and evaluates every test size on
/// freshly generated data without retraining.
std::vector<ZeroShotRow> run_zero_shot(const RunConfig& cfg);

struct RolloutComparison {
    std::vector<double> time;
    std::vector<double> h_true;      ///< true H along the true trajectory
    std::vector<double> h_model;     ///< model H along the model trajectory
    std::vector<double> state_mse;   ///< MSE between true and model states
    double h0 = 0.0;                 ///< true H at the initial state
    double max_model_drift = 0.0;    ///< max_t |H_model(t) - h0| / |h0|
    double max_true_drift = 0.0;     ///< max_t |H_true(t) - h0| / |h0|
    double final_state_mse = 0.0;
    /// The model rollout failed at `diverged_step`; later model entries are
    /// NaN and the drift and final error are infinite.
    bool diverged = false;
    std::size_t diverged_step = 0;
    std::string failure;
};

/// Rolls out the true system and `model` from y0 and compares them. A model
/// rollout that fails is reported as diverged; a failing true rollout throws.
RolloutComparison compare_rollouts(const SystemSpec& spec, const HamiltonianModel& model, const PhaseState& y0,
                                   const IntegrationConfig& integ);

/// Initial condition drawn from the configured data distribution.
PhaseState rollout_initial_state(const RunConfig& cfg, std::uint64_t seed);

RolloutComparison run_rollout_eval(const RunConfig& cfg, const ModelParams& params);
/// Trains with cfg.seed first.
RolloutComparison run_rollout_eval(const RunConfig& cfg);

struct AblationCell {
    int d_h = 0;
    int width = 0;
    int d_m = 0;
    int d_l = 0;
    double test_mse = 0.0;
    bool skipped = false;
    std::string note;
};

/// Grid over cfg.ablation on one dataset generated with cfg.seed.
std::vector<AblationCell> run_ablation(const RunConfig& cfg);

double median(std::vector<double> values);

}  // namespace rfhgn
