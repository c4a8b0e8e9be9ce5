#include "doctest.h"
#include "helpers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

using namespace rfhgn;
using testutil::random_state;

namespace {

PhaseState state_from(std::initializer_list<double> q, int d) {
    Vec qv(static_cast<Eigen::Index>(q.size()));
    std::copy(q.begin(), q.end(), qv.data());
    (void)d;
    return {qv, Vec::Zero(qv.size())};
}

/// Sorts (norm, polar, second angle, index) tuples; generic points have no ties.
std::vector<int> brute_force_refs(const Vec& c, int d, int wanted) {
    std::vector<std::tuple<double, double, double, int>> keys;
    const auto n = c.size() / d;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vec v = c.segment(i * d, d);
        double polar = std::atan2(v[1], v[0]);
        if (polar < 0) polar += 2 * std::numbers::pi;
        const double second = d == 3 ? std::acos(v[1] / v.norm()) : 0.0;
        keys.emplace_back(v.norm(), polar, second, static_cast<int>(i));
    }
    std::sort(keys.begin(), keys.end());
    std::vector<int> out;
    for (int k = 0; k < wanted; ++k) out.push_back(std::get<3>(keys[static_cast<std::size_t>(k)]));
    return out;
}

}  // namespace

TEST_CASE("center_positions subtracts the mean position") {
    const auto topo = GraphTopology::chain(2, 2);
    const auto c = center_positions(state_from({1, 0, 3, 0}, 2), topo);
    CHECK(c.mean[0] == doctest::Approx(2.0));
    CHECK(c.mean[1] == doctest::Approx(0.0));
    CHECK(c.q[0] == doctest::Approx(-1.0));
    CHECK(c.q[2] == doctest::Approx(1.0));
}

TEST_CASE("select_reference breaks distance ties by polar angle") {
    Vec c(4);
    c << -1, 0, 1, 0;
    const auto refs = select_reference(c, 2, 1e-10);
    REQUIRE(refs.size() == 1);
    CHECK(refs[0] == 1);

    Vec c2(6);
    c2 << 2, 0, 0.5, 0.5, 0, 0;  // node 2 sits on the mean and is skipped
    const auto refs2 = select_reference(c2, 2, 1e-10);
    CHECK(refs2[0] == 1);
    CHECK(select_reference(c2, 1, 1e-10).empty());
}

TEST_CASE("select_reference in 3D uses polar, second angle, then index") {
    Vec c(12);
    c << 1, 0, 0, 0, 1, 0, 0, 0, 1, -1, 0, 0;
    const auto refs = select_reference(c, 3, 1e-10);
    REQUIRE(refs.size() == 2);
    // (1,0,0) and (0,0,1) share norm, polar angle 0 and second angle pi/2.
    CHECK(refs[0] == 0);
    CHECK(refs[1] == 2);
}

TEST_CASE("select_reference matches a brute-force sort on generic points") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        for (int d : {2, 3}) {
            const int n = 3 + trial % 6;
            Vec c(n * d);
            for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = rng.uniform(-1, 1);
            const int wanted = d == 2 ? 1 : 2;
            CHECK(select_reference(c, d, 1e-10) == brute_force_refs(c, d, wanted));
        }
    }
}

TEST_CASE("2D basis is the reference direction and its rotation") {
    Vec c(2);
    c << 3, 4;
    const auto f = build_basis(c, {0}, 2);
    CHECK(f.basis(0, 0) == doctest::Approx(0.6));
    CHECK(f.basis(1, 0) == doctest::Approx(0.8));
    CHECK(f.basis(0, 1) == doctest::Approx(-0.8));
    CHECK(f.basis(1, 1) == doctest::Approx(0.6));
    CHECK(f.smooth());
}

TEST_CASE("3D basis from Gram-Schmidt") {
    Vec c(6);
    c << 2, 0, 0, 1, 1, 0;
    const auto f = build_basis(c, {0, 1}, 3);
    CHECK_FALSE(f.colinear_branch);
    CHECK((f.basis - Mat::Identity(3, 3)).norm() < 1e-14);
}

TEST_CASE("3D basis switches to the cross product for nearly colinear references") {
    Vec c(6);
    c << 1, 0, 0, 0.999, 0.01, 0;
    const auto f = build_basis(c, {0, 1}, 3);
    CHECK(f.colinear_branch);
    Mat expected(3, 3);
    expected << 1, 0, 0,  //
        0, 0, -1,         //
        0, 1, 0;
    CHECK((f.basis - expected).norm() < 1e-12);
    CHECK(std::abs(f.basis.determinant() - 1.0) < 1e-12);
}

TEST_CASE("degenerate inputs give the identity basis") {
    const auto topo = GraphTopology::chain(3, 2);
    const auto inv = encode_invariant(state_from({1, 1, 1, 1, 1, 1}, 2), topo);
    CHECK(inv.frame.degenerate);
    CHECK(inv.frame.basis == Mat::Identity(2, 2));
    CHECK(inv.q_bar.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("encoding is invariant under a 37 degree rotation and a translation") {
    const auto topo = GraphTopology::chain(5, 2);
    const Mat r = testutil::rotation2(37.0 * std::numbers::pi / 180.0);
    Vec shift(2);
    shift << 5, -3;
    Rng rng(4);
    int compared = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const auto s = random_state(10, rng);
        const auto a = encode_invariant(s, topo);
        const auto rotated = encode_invariant(testutil::rigid_motion(s, r, Vec::Zero(2)), topo);
        if (rotated.frame.ref_indices == a.frame.ref_indices) {
            CHECK((rotated.q_bar - a.q_bar).cwiseAbs().maxCoeff() < 1e-10);
            CHECK((rotated.p_bar - a.p_bar).cwiseAbs().maxCoeff() < 1e-10);
            ++compared;
        }
        const auto moved = encode_invariant(testutil::rigid_motion(s, Mat::Identity(2, 2), shift), topo);
        REQUIRE(moved.frame.ref_indices == a.frame.ref_indices);
        CHECK((moved.q_bar - a.q_bar).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((moved.p_bar - a.p_bar).cwiseAbs().maxCoeff() < 1e-12);
    }
    CHECK(compared > 30);
}

TEST_CASE("3D encoding is rotation invariant on the same branch") {
    const auto topo = GraphTopology::lattice(2, 3, 3);
    Rng rng(8);
    int compared = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const auto s = random_state(18, rng);
        const Mat r = testutil::random_rotation(3, rng);
        const auto a = encode_invariant(s, topo);
        const auto b = encode_invariant(testutil::rigid_motion(s, r, Vec::Zero(3)), topo);
        if (a.frame.ref_indices != b.frame.ref_indices || a.frame.colinear_branch != b.frame.colinear_branch) continue;
        CHECK((a.q_bar - b.q_bar).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((a.p_bar - b.p_bar).cwiseAbs().maxCoeff() < 1e-10);
        ++compared;
    }
    CHECK(compared > 30);
}

TEST_CASE("reference node lands on the first axis, norms and zero mean are kept") {
    const auto topo = GraphTopology::ring(6, 2);
    Rng rng(21);
    const auto s = random_state(12, rng);
    const auto inv = encode_invariant(s, topo);
    const auto c = center_positions(s, topo);
    const int ref = inv.frame.ref_indices.at(0);
    CHECK(inv.q_bar[2 * ref] == doctest::Approx(c.q.segment(2 * ref, 2).norm()));
    CHECK(std::abs(inv.q_bar[2 * ref + 1]) < 1e-14);
    Vec sum = Vec::Zero(2);
    for (int i = 0; i < 6; ++i) {
        CHECK(inv.q_bar.segment(2 * i, 2).norm() == doctest::Approx(c.q.segment(2 * i, 2).norm()));
        CHECK(inv.p_bar.segment(2 * i, 2).norm() == doctest::Approx(s.p.segment(2 * i, 2).norm()));
        sum += inv.q_bar.segment(2 * i, 2);
    }
    CHECK(sum.norm() < 1e-14);
}

TEST_CASE("node permutations permute the invariant coordinates") {
    const auto topo = GraphTopology::chain(4, 3);
    Rng rng(2);
    const auto s = random_state(12, rng);
    const std::vector<int> perm{2, 0, 3, 1};
    const auto a = encode_invariant(s, topo);
    const auto b = encode_invariant(testutil::permute_nodes(s, perm, 3), testutil::permute_topology(topo, perm));
    for (int i = 0; i < 4; ++i) {
        CHECK((b.q_bar.segment(3 * i, 3) - a.q_bar.segment(3 * perm[i], 3)).norm() < 1e-12);
        CHECK((b.p_bar.segment(3 * i, 3) - a.p_bar.segment(3 * perm[i], 3)).norm() < 1e-12);
    }
}

TEST_CASE("frame gradient mode names round-trip") {
    CHECK(frame_gradient_from_string(to_string(FrameGradient::exact)) == FrameGradient::exact);
    CHECK(frame_gradient_from_string(to_string(FrameGradient::frozen)) == FrameGradient::frozen);
    CHECK_THROWS(frame_gradient_from_string("other"));
}
