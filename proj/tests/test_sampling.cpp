#include "doctest.h"
#include "helpers.hpp"

#include "rfhgn/physics.hpp"

#include <cmath>

using namespace rfhgn;

TEST_CASE("ELM layers are reproducible and have the configured moments") {
    SamplerConfig cfg;
    cfg.method = SamplerMethod::elm;
    Rng a(1), b(1);
    const auto la = sample_elm(100, 1000, cfg, a);
    const auto lb = sample_elm(100, 1000, cfg, b);
    CHECK(la.weight == lb.weight);
    CHECK(la.bias == lb.bias);
    const double n = static_cast<double>(la.weight.size());
    const double mean = la.weight.sum() / n;
    const double var = (la.weight.array() - mean).square().sum() / n;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
    CHECK(la.bias.minCoeff() >= -1.0);
    CHECK(la.bias.maxCoeff() < 1.0);
    CHECK(std::abs(la.bias.mean()) < 0.1);

    const auto one = sample_elm(1, 1, cfg, a);
    CHECK(one.weight.rows() == 1);
    CHECK(one.weight.cols() == 1);
    CHECK(one.bias.size() == 1);
    CHECK_THROWS_AS(sample_elm(0, 3, cfg, a), std::invalid_argument);
}

TEST_CASE("SWIM neurons follow the pair formula") {
    SamplerConfig cfg;
    Rng rng(2);
    Mat x(2, 2);
    x << 0, 0, 2, 0;
    const auto layer = sample_swim(x, 20, cfg, rng);
    for (int k = 0; k < 20; ++k) {
        const Eigen::RowVectorXd w = layer.weight.row(k);
        const double b = layer.bias[k];
        // Pair (x0, x1) gives w = (0.5, 0), b = 0; the reverse gives w = (-0.5, 0), b = 1.
        const bool forward = std::abs(w[0] - 0.5) < 1e-15 && w[1] == 0.0 && std::abs(b) < 1e-15;
        const bool reverse = std::abs(w[0] + 0.5) < 1e-15 && w[1] == 0.0 && std::abs(b - 1.0) < 1e-15;
        CHECK((forward || reverse));
    }

    Mat y(2, 2);
    y << 1, 1, 1, 3;
    const auto l2 = sample_swim(y, 20, cfg, rng);
    bool saw_forward = false;
    for (int k = 0; k < 20; ++k) {
        if (l2.weight(k, 1) > 0) {
            CHECK(l2.weight(k, 0) == 0.0);
            CHECK(l2.weight(k, 1) == doctest::Approx(0.5));
            CHECK(l2.bias[k] == doctest::Approx(-0.5));
            saw_forward = true;
        }
    }
    CHECK(saw_forward);
}

TEST_CASE("every SWIM neuron maps some input pair to 0 and 1") {
    SamplerConfig cfg;
    Rng rng(3);
    Mat x(30, 4);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1, 1);
    const auto layer = sample_swim(x, 40, cfg, rng);
    for (int k = 0; k < 40; ++k) {
        const Vec pre = x * layer.weight.row(k).transpose() + Vec::Constant(30, layer.bias[k]);
        bool found = false;
        for (int i = 0; i < 30 && !found; ++i) {
            for (int j = 0; j < 30 && !found; ++j) {
                if (i == j || std::abs(pre[i]) > 1e-12 || std::abs(pre[j] - 1.0) > 1e-12) continue;
                const Eigen::RowVectorXd diff = x.row(j) - x.row(i);
                found = (layer.weight.row(k) - diff / diff.squaredNorm()).norm() < 1e-12;
            }
        }
        CHECK(found);
    }
}

TEST_CASE("SWIM reports unusable inputs") {
    SamplerConfig cfg;
    Rng rng(4);
    const Mat same = Mat::Ones(5, 3);
    try {
        sample_swim(same, 3, cfg, rng);
        FAIL("expected SamplingError");
    } catch (const SamplingError& e) {
        CHECK(e.kind() == SamplingError::Kind::too_few_distinct);
    }

    Mat mostly(5000, 2);
    mostly.setZero();
    mostly(0, 0) = 1.0;
    cfg.max_retries = 1;
    try {
        sample_swim(mostly, 50, cfg, rng);
        FAIL("expected SamplingError");
    } catch (const SamplingError& e) {
        CHECK(e.kind() == SamplingError::Kind::duplicate_retries_exhausted);
    }

    cfg.resample_duplicates = false;
    const auto layer = sample_swim(mostly, 50, cfg, rng);
    CHECK(layer.weight.rowwise().norm().minCoeff() == 0.0);
}

TEST_CASE("random layers have the encoder shapes for both methods") {
    const auto spec = SystemSpec::chain(4, 2);
    Rng data_rng(5);
    const auto data = generate_samples(spec, 20, {-1, 1}, {-1, 1}, data_rng);
    for (auto method : {SamplerMethod::swim, SamplerMethod::elm}) {
        SamplerConfig cfg;
        cfg.method = method;
        Rng rng(6);
        const auto p = build_random_layers({2, 7, 9}, data, cfg, rng);
        CHECK(p.node_enc.weight.rows() == 7);
        CHECK(p.node_enc.weight.cols() == 4);
        CHECK(p.edge_enc.weight.cols() == 3);
        CHECK(p.msg_enc.weight.rows() == 9);
        CHECK(p.msg_enc.weight.cols() == 14);
        CHECK(p.readout_w.size() == 0);
        Rng again(6);
        CHECK(build_random_layers({2, 7, 9}, data, cfg, again).msg_enc.weight == p.msg_enc.weight);
    }
}

TEST_CASE("sampler method names round-trip") {
    CHECK(sampler_method_from_string(to_string(SamplerMethod::swim)) == SamplerMethod::swim);
    CHECK(sampler_method_from_string(to_string(SamplerMethod::elm)) == SamplerMethod::elm);
    CHECK_THROWS(sampler_method_from_string("gauss"));
}
