#include "doctest.h"
#include "helpers.hpp"

#include "rfhgn/trainer.hpp"

#include <cmath>

using namespace rfhgn;
using testutil::random_model;

namespace {

Dataset chain_data(std::size_t count, std::uint64_t seed) {
    const auto spec = SystemSpec::chain(4, 2);
    Rng rng(seed);
    return generate_samples(spec, count, {-1, 1}, {-1, 1}, rng);
}

}  // namespace

TEST_CASE("one-sample system has one block of rows plus the anchor row") {
    auto params = random_model(2, 4, 4, 1);
    Dataset ds;
    ds.topology = GraphTopology::chain(2, 2);
    Sample s;
    s.state = PhaseState::zeros(4);
    s.state.q << 0.1, 0.2, -0.3, 0.4;
    s.deriv = PhaseState::zeros(4);
    s.deriv->q << 1, 0, 0, 0;
    ds.samples.push_back(s);
    ds.anchor = {s.state, 2.5};
    const auto sys = assemble_system(params, ds);
    CHECK(sys.z.rows() == 9);
    CHECK(sys.z.cols() == 9);
    Vec expected(9);
    expected << 0, 0, 0, 0, 1, 0, 0, 0, 2.5;
    CHECK(sys.u == expected);
    CHECK(sys.z(8, 8) == 1.0);
    CHECK(sys.z.col(8).head(8).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("coefficients of a synthetic quadratic model are recovered") {
    Rng rng(2);
    const int m = 300;
    Mat z(m, 6);
    for (int i = 0; i < m; ++i) {
        const double x = rng.uniform(-1, 1);
        const double y = rng.uniform(-1, 1);
        z.row(i) << 1, x, y, x * x, x * y, y * y;
    }
    Vec theta(6);
    theta << 0.5, -1, 2, 3, -0.25, 1.5;
    const auto sol = solve_least_squares({z, z * theta}, 1e-6);
    CHECK(sol.effective_rank == 6);
    CHECK((sol.theta - theta).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("identity and duplicate-column systems") {
    const Vec u = Vec::LinSpaced(5, 1, 5);
    const auto id = solve_least_squares({Mat::Identity(5, 5), u}, 1e-6);
    CHECK((id.theta - u).norm() < 1e-14);

    Mat dup(4, 2);
    dup << 1, 1, 2, 2, 3, 3, 4, 4;
    Vec rhs(4);
    rhs << 1, 2, 3, 4;
    const auto sol = solve_least_squares({dup, rhs}, 1e-6);
    CHECK(sol.effective_rank == 1);
    CHECK(sol.theta[0] == doctest::Approx(0.5));
    CHECK(sol.theta[1] == doctest::Approx(0.5));
}

TEST_CASE("least squares agrees with a pivoted QR reference") {
    Rng rng(3);
    Mat z(200, 20);
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
    Vec u(200);
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = rng.normal();
    const Vec reference = z.colPivHouseholderQr().solve(u);
    const auto sol = solve_least_squares({z, u}, 1e-6);
    CHECK((sol.theta - reference).norm() < 1e-10 * reference.norm());
    CHECK(sol.residual_norm == doctest::Approx((z * reference - u).norm()));
    // Optimality: the residual is orthogonal to the columns.
    CHECK((z.transpose() * (z * sol.theta - u)).norm() < 1e-10 * z.norm() * u.norm());

    SolverOptions ridge;
    ridge.method = SolveMethod::ridge;
    ridge.ridge_lambda = 0.3;
    const Mat a = z.transpose() * z + 0.3 * Mat::Identity(20, 20);
    const Vec ridge_ref = a.ldlt().solve(z.transpose() * u);
    CHECK((solve_least_squares({z, u}, ridge).theta - ridge_ref).norm() < 1e-10 * ridge_ref.norm());
}

TEST_CASE("a zero matrix is flagged") {
    const auto sol = solve_least_squares({Mat::Zero(6, 3), Vec::Ones(6)}, 1e-6);
    CHECK(sol.zero_matrix);
    CHECK(sol.theta == Vec::Zero(3));
    CHECK(sol.effective_rank == 0);
}

TEST_CASE("central differences along trajectories") {
    Trajectory traj;
    traj.dt = 0.1;
    for (int k = 0; k < 5; ++k) {
        const double t = 0.1 * k;
        PhaseState s = PhaseState::zeros(1);
        s.q[0] = 2.0 + 3.0 * t;
        s.p[0] = t * t;
        traj.states.push_back(s);
    }
    const auto samples = derivatives_from_trajectory(traj);
    REQUIRE(samples.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        const double t = 0.1 * static_cast<double>(k + 1);
        CHECK(samples[k].state.q[0] == traj.states[k + 1].q[0]);
        CHECK(samples[k].deriv->q[0] == doctest::Approx(3.0).epsilon(1e-12));
        CHECK(samples[k].deriv->p[0] == doctest::Approx(2.0 * t).epsilon(1e-12));
    }

    // Error at the fixed time t = 1 shrinks as dt^2.
    auto harmonic_error = [](double dt) {
        Trajectory h;
        h.dt = dt;
        for (int k = -1; k <= 1; ++k) {
            PhaseState s = PhaseState::zeros(1);
            s.q[0] = std::cos(1.0 + k * dt);
            s.p[0] = -std::sin(1.0 + k * dt);
            h.states.push_back(s);
        }
        const auto d = derivatives_from_trajectory(h);
        return std::abs(d[0].deriv->q[0] + std::sin(1.0));
    };
    const double ratio = harmonic_error(0.02) / harmonic_error(0.01);
    CHECK(ratio == doctest::Approx(4.0).epsilon(0.01));

    traj.dt = 0.0;
    CHECK_THROWS_AS(derivatives_from_trajectory(traj), std::invalid_argument);
    traj.dt = 0.1;
    traj.states.resize(2);
    CHECK_THROWS_AS(derivatives_from_trajectory(traj), std::invalid_argument);
}

TEST_CASE("training reproduces model-generated dynamics") {
    // Targets come from a network with known readout; the same encoders must
    // recover it.
    const auto data = chain_data(60, 4);
    auto truth = random_model(2, 3, 3, 5);
    Dataset ds = data;
    for (auto& s : ds.samples) s.deriv = PhaseState::from_flat(predicted_dynamics(truth, ds.topology, s.state));
    ds.anchor.h0 = forward(truth, ds.topology, ds.anchor.state).hamiltonian;
    auto encoders = truth;
    encoders.readout_w.resize(0);
    const auto sys = assemble_system(encoders, ds);
    const auto sol = solve_least_squares(sys, 1e-12);
    REQUIRE(sol.effective_rank == 7);
    CHECK((sol.theta.head(6) - truth.readout_w).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(sol.theta[6] == doctest::Approx(truth.readout_b).epsilon(1e-8));
}

TEST_CASE("trained model honours the anchor and is seed deterministic") {
    const auto ds = chain_data(200, 6);
    SamplerConfig sampler;
    sampler.rng_seed = 9;
    const auto a = train(ds, {2, 16, 48}, sampler);
    const auto b = train(ds, {2, 16, 48}, sampler);
    CHECK(a.params.readout_w == b.params.readout_w);
    CHECK(a.params.readout_b == b.params.readout_b);
    const double h = forward(a.params, ds.topology, ds.anchor.state).hamiltonian;
    CHECK(std::abs(h - ds.anchor.h0) < 1e-3);
    CHECK(a.report.train_mse < 1e-2);
    CHECK(a.report.effective_rank > 0);
    sampler.rng_seed = 10;
    CHECK(train(ds, {2, 16, 48}, sampler).params.readout_w != a.params.readout_w);
}

TEST_CASE("streaming normal equations agree with the SVD solve") {
    const auto ds = chain_data(120, 7);
    SamplerConfig sampler;
    Rng rng(8);
    auto params = build_random_layers({2, 8, 16}, ds, sampler, rng);
    const auto sys = assemble_system(params, ds);
    const auto svd = solve_least_squares(sys, 1e-6);
    const auto ne = accumulate_normal_equations(params, ds, 32, ExecPolicy::serial);
    CHECK(ne.rows == sys.z.rows());
    CHECK((ne.gram - sys.z.transpose() * sys.z).norm() < 1e-10 * ne.gram.norm());
    const auto sol = solve_normal_equations(ne, 1e-6);
    CHECK(sol.residual_norm == doctest::Approx(svd.residual_norm).epsilon(1e-4));
}

TEST_CASE("serial and parallel assembly are bitwise identical") {
    const auto ds = chain_data(50, 9);
    const auto params = random_model(2, 6, 10, 10);
    const auto serial = assemble_system(params, ds, ExecPolicy::serial);
    const auto parallel = assemble_system(params, ds, ExecPolicy::parallel);
    CHECK(serial.z == parallel.z);
    CHECK(serial.u == parallel.u);
    const auto gs = batch_gradients(params, ds.topology, ds.samples, ExecPolicy::serial);
    const auto gp = batch_gradients(params, ds.topology, ds.samples, ExecPolicy::parallel);
    CHECK(gs == gp);
}

TEST_CASE("learned Hamiltonian adapter forwards to the network") {
    const auto params = random_model(2, 5, 6, 11);
    const auto topo = GraphTopology::chain(3, 2);
    const LearnedHamiltonian model(params, topo);
    Rng rng(12);
    const auto s = testutil::random_state(6, rng);
    CHECK(model.energy(s) == forward(params, topo, s).hamiltonian);
    CHECK(model.gradient(s) == model_gradient(params, topo, s));
    CHECK_FALSE(model.separable());
}
