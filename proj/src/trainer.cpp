#include "rfhgn/trainer.hpp"

#include "rfhgn/gradients.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <chrono>
#include <stdexcept>

namespace rfhgn {

const char* to_string(SolveMethod m) {
    switch (m) {
        case SolveMethod::svd: return "svd";
        case SolveMethod::normal_equations: return "normal_equations";
        case SolveMethod::ridge: return "ridge";
    }
    return "svd";
}

SolveMethod solve_method_from_string(const std::string& name) {
    if (name == "svd") return SolveMethod::svd;
    if (name == "normal_equations") return SolveMethod::normal_equations;
    if (name == "ridge") return SolveMethod::ridge;
    throw std::invalid_argument("unknown solve method: " + name);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_trainable(const ModelParams& params, const Dataset& ds) {
    params.validate_for(ds.topology, false);
    const Eigen::Index size = ds.topology.coord_size();
    for (std::size_t k = 0; k < ds.samples.size(); ++k) {
        const auto& s = ds.samples[k];
        if (!s.deriv) throw std::invalid_argument("sample " + std::to_string(k) + " has no time derivative");
        if (s.state.q.size() != size || s.deriv->q.size() != size || s.deriv->p.size() != size) {
            throw std::invalid_argument("sample " + std::to_string(k) + " does not match the topology size");
        }
    }
    if (ds.anchor.state.q.size() != size) throw std::invalid_argument("dataset has no anchor state");
}

void fill_targets(const Dataset& ds, std::size_t first, std::size_t count, Eigen::Ref<Vec> u) {
    const Eigen::Index block = 2 * ds.topology.coord_size();
    for (std::size_t k = 0; k < count; ++k) {
        const auto& deriv = *ds.samples[first + k].deriv;
        u.segment(static_cast<Eigen::Index>(k) * block, block) = apply_symplectic_inverse(deriv.flat());
    }
}

/// Minimum-norm solution from singular triplets with relative cutoff (or
/// Tikhonov filter factors when lambda > 0).
Vec filtered_solve(const Mat& left, const Vec& sing, const Mat& right, const Vec& rhs, double rcond, double lambda,
                   int& rank) {
    const Vec c = left.transpose() * rhs;
    Vec scaled = Vec::Zero(sing.size());
    const double cutoff = rcond * (sing.size() > 0 ? sing[0] : 0.0);
    rank = 0;
    for (Eigen::Index i = 0; i < sing.size(); ++i) {
        if (lambda > 0.0) {
            scaled[i] = sing[i] * c[i] / (sing[i] * sing[i] + lambda);
            if (sing[i] > 0.0) ++rank;
        } else if (sing[i] > cutoff && sing[i] > 0.0) {
            scaled[i] = c[i] / sing[i];
            ++rank;
        }
    }
    return right * scaled;
}

}  // namespace

LinearSystem assemble_system(const ModelParams& params, const Dataset& dataset, ExecPolicy policy) {
    check_trainable(params, dataset);
    const auto& topo = dataset.topology;
    const int d_l = params.dims.d_l();
    const Eigen::Index block = 2 * topo.coord_size();
    const auto m = static_cast<Eigen::Index>(dataset.samples.size());
    LinearSystem sys;
    sys.z = Mat::Zero(block * m + 1, d_l + 1);
    sys.u.resize(block * m + 1);
    fill_jacobian_rows(params, topo, dataset.samples, sys.z.topRows(block * m), policy);
    fill_targets(dataset, 0, dataset.samples.size(), sys.u.head(block * m));
    const Eigen::Index last = block * m;
    sys.z.row(last).head(d_l) = global_features(params, topo, dataset.anchor.state).transpose();
    sys.z(last, d_l) = 1.0;
    sys.u[last] = dataset.anchor.h0;
    return sys;
}

LstsqSolution solve_least_squares(const LinearSystem& sys, double rcond) {
    SolverOptions opts;
    opts.rcond = rcond;
    return solve_least_squares(sys, opts);
}

LstsqSolution solve_least_squares(const LinearSystem& sys, const SolverOptions& opts) {
    if (opts.rcond < 0.0) throw std::invalid_argument("rcond must be nonnegative");
    if (sys.z.rows() != sys.u.size()) throw std::invalid_argument("Z and u row counts differ");
    LstsqSolution sol;
    const auto n = sys.z.cols();
    if (sys.z.isZero(0.0)) {
        sol.theta = Vec::Zero(n);
        sol.zero_matrix = true;
        sol.residual_norm = sys.u.norm();
        return sol;
    }
    const double lambda = opts.method == SolveMethod::ridge ? opts.ridge_lambda : 0.0;
    if (opts.method == SolveMethod::normal_equations) {
        NormalEquations ne;
        ne.gram = sys.z.transpose() * sys.z;
        ne.rhs = sys.z.transpose() * sys.u;
        ne.u_sq = sys.u.squaredNorm();
        ne.rows = sys.z.rows();
        sol = solve_normal_equations(ne, opts.rcond);
    } else if (sys.z.rows() >= n) {
        // Z = Q R with orthonormal Q: the singular values and truncated
        // pseudo-inverse of Z are those of the small square factor R.
        Eigen::HouseholderQR<Mat> qr(sys.z);
        const Mat r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
        Vec qtu = sys.u;
        qtu.applyOnTheLeft(qr.householderQ().adjoint());
        Eigen::BDCSVD<Mat> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
        sol.theta = filtered_solve(svd.matrixU(), svd.singularValues(), svd.matrixV(), qtu.head(n), opts.rcond, lambda,
                                   sol.effective_rank);
    } else {
        Eigen::BDCSVD<Mat> svd(sys.z, Eigen::ComputeThinU | Eigen::ComputeThinV);
        sol.theta = filtered_solve(svd.matrixU(), svd.singularValues(), svd.matrixV(), sys.u, opts.rcond, lambda,
                                   sol.effective_rank);
    }
    sol.residual_norm = (sys.z * sol.theta - sys.u).norm();
    return sol;
}

NormalEquations accumulate_normal_equations(const ModelParams& params, const Dataset& dataset,
                                            std::size_t block_samples, ExecPolicy policy) {
    check_trainable(params, dataset);
    if (block_samples == 0) throw std::invalid_argument("block size must be positive");
    const auto& topo = dataset.topology;
    const int d_l = params.dims.d_l();
    const Eigen::Index block = 2 * topo.coord_size();
    NormalEquations ne;
    ne.gram = Mat::Zero(d_l + 1, d_l + 1);
    ne.rhs = Vec::Zero(d_l + 1);
    const std::span<const Sample> all(dataset.samples);
    for (std::size_t first = 0; first < all.size(); first += block_samples) {
        const std::size_t count = std::min(block_samples, all.size() - first);
        Mat z = Mat::Zero(block * static_cast<Eigen::Index>(count), d_l);
        Vec u(block * static_cast<Eigen::Index>(count));
        fill_jacobian_rows(params, topo, all.subspan(first, count), z, policy);
        fill_targets(dataset, first, count, u);
        ne.gram.topLeftCorner(d_l, d_l).selfadjointView<Eigen::Lower>().rankUpdate(z.transpose());
        ne.rhs.head(d_l) += z.transpose() * u;
        ne.u_sq += u.squaredNorm();
        ne.rows += z.rows();
    }
    ne.gram.topLeftCorner(d_l, d_l) =
        ne.gram.topLeftCorner(d_l, d_l).selfadjointView<Eigen::Lower>().toDenseMatrix();
    Vec anchor(d_l + 1);
    anchor.head(d_l) = global_features(params, topo, dataset.anchor.state);
    anchor[d_l] = 1.0;
    ne.gram += anchor * anchor.transpose();
    ne.rhs += dataset.anchor.h0 * anchor;
    ne.u_sq += dataset.anchor.h0 * dataset.anchor.h0;
    ne.rows += 1;
    return ne;
}

LstsqSolution solve_normal_equations(const NormalEquations& ne, double rcond) {
    if (rcond < 0.0) throw std::invalid_argument("rcond must be nonnegative");
    LstsqSolution sol;
    const auto n = ne.gram.rows();
    if (ne.gram.isZero(0.0)) {
        sol.theta = Vec::Zero(n);
        sol.zero_matrix = true;
        sol.residual_norm = std::sqrt(ne.u_sq);
        return sol;
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(ne.gram);
    const Vec& lam = eig.eigenvalues();  // ascending
    const double cutoff = rcond * rcond * lam[n - 1];
    Vec coeff = eig.eigenvectors().transpose() * ne.rhs;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (lam[i] > cutoff && lam[i] > 0.0) {
            coeff[i] /= lam[i];
            ++sol.effective_rank;
        } else {
            coeff[i] = 0.0;
        }
    }
    sol.theta = eig.eigenvectors() * coeff;
    const double res_sq = ne.u_sq - 2.0 * sol.theta.dot(ne.rhs) + sol.theta.dot(ne.gram * sol.theta);
    sol.residual_norm = std::sqrt(std::max(res_sq, 0.0));
    return sol;
}

TrainResult train(const Dataset& dataset, const ModelDims& dims, const SamplerConfig& sampler,
                  const SolverOptions& solver, Rng& rng, const InvarianceConfig& invariance) {
    const auto start = Clock::now();
    TrainResult out;
    auto t = Clock::now();
    out.params = build_random_layers(dims, dataset, sampler, rng, invariance);
    out.report.sampling_seconds = seconds_since(t);

    const int d_l = dims.d_l();
    const double n_grad_entries =
        static_cast<double>(dataset.samples.size()) * 2.0 * static_cast<double>(dataset.topology.coord_size());
    LstsqSolution sol;
    double anchor_residual = 0.0;
    if (solver.method == SolveMethod::normal_equations) {
        t = Clock::now();
        const auto ne = accumulate_normal_equations(out.params, dataset, solver.block_samples, solver.policy);
        out.report.assembly_seconds = seconds_since(t);
        t = Clock::now();
        sol = solve_normal_equations(ne, solver.rcond);
        out.report.solve_seconds = seconds_since(t);
        Vec anchor(d_l + 1);
        anchor.head(d_l) = global_features(out.params, dataset.topology, dataset.anchor.state);
        anchor[d_l] = 1.0;
        anchor_residual = anchor.dot(sol.theta) - dataset.anchor.h0;
        out.report.train_mse =
            std::max(sol.residual_norm * sol.residual_norm - anchor_residual * anchor_residual, 0.0) / n_grad_entries;
    } else {
        t = Clock::now();
        const auto sys = assemble_system(out.params, dataset, solver.policy);
        out.report.assembly_seconds = seconds_since(t);
        t = Clock::now();
        sol = solve_least_squares(sys, solver);
        out.report.solve_seconds = seconds_since(t);
        const auto grad_rows = sys.z.rows() - 1;
        // J is a signed permutation, so the gradient-row residual equals the
        // y_dot residual entry for entry.
        out.report.train_mse =
            (sys.z.topRows(grad_rows) * sol.theta - sys.u.head(grad_rows)).squaredNorm() / n_grad_entries;
    }
    out.params.readout_w = sol.theta.head(d_l);
    out.params.readout_b = sol.theta[d_l];
    out.report.residual_norm = sol.residual_norm;
    out.report.effective_rank = sol.effective_rank;
    out.report.zero_matrix = sol.zero_matrix;
    out.report.wall_time_seconds = seconds_since(start);
    return out;
}

TrainResult train(const Dataset& dataset, const ModelDims& dims, const SamplerConfig& sampler,
                  const SolverOptions& solver) {
    Rng rng(sampler.rng_seed, 1);
    return train(dataset, dims, sampler, solver, rng);
}

std::vector<Sample> derivatives_from_trajectory(const Trajectory& traj) {
    if (!(traj.dt > 0.0)) throw std::invalid_argument("trajectory time step must be positive");
    if (traj.states.size() < 3) throw std::invalid_argument("need at least 3 states for central differences");
    std::vector<Sample> out;
    out.reserve(traj.states.size() - 2);
    const double inv = 1.0 / (2.0 * traj.dt);
    for (std::size_t k = 1; k + 1 < traj.states.size(); ++k) {
        const auto& prev = traj.states[k - 1];
        const auto& next = traj.states[k + 1];
        out.push_back({traj.states[k], PhaseState{(next.q - prev.q) * inv, (next.p - prev.p) * inv}});
    }
    return out;
}

LearnedHamiltonian::LearnedHamiltonian(ModelParams params, GraphTopology topo)
    : params_(std::move(params)), topo_(std::move(topo)) {
    params_.validate_for(topo_, true);
}

double LearnedHamiltonian::energy(const PhaseState& state) const {
    return predict_hamiltonian(params_, topo_, state);
}

Vec LearnedHamiltonian::gradient(const PhaseState& state) const {
    return model_gradient(params_, topo_, state);
}

}  // namespace rfhgn
