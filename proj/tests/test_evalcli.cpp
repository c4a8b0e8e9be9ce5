#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"

#include "rfhgn/io.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <string>

#include <unistd.h>

using namespace rfhgn;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("rfhgn_unit_" + std::to_string(::getpid())) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

ModelIoError::Kind load_error_kind(const std::string& text) {
    try {
        model_from_string(text);
    } catch (const ModelIoError& e) {
        return e.kind();
    }
    FAIL("expected ModelIoError");
    return ModelIoError::Kind::io;
}

RunConfig small_chain() {
    auto cfg = preset_config("chain8");
    cfg.system.n = 4;
    cfg.data.count = 200;
    cfg.dims = {2, 8, 24};
    cfg.n_seeds = 2;
    cfg.integration.steps = 100;
    return cfg;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + RFHGN_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
}

}  // namespace

TEST_CASE("mse and relative error examples") {
    Vec a(2), b(2);
    a << 3, 1.5;
    b << 3, 4;
    CHECK(mse(a, b) == doctest::Approx(3.125));
    CHECK(relative_error(a, b) == doctest::Approx(0.5));
    CHECK(relative_error(b, b) == 0.0);
    CHECK_THROWS_AS(relative_error(a, Vec::Zero(2)), std::domain_error);
}

TEST_CASE("model text round-trips bitwise") {
    auto params = testutil::random_model(3, 5, 7, 1, FrameGradient::exact);
    params.invariance.eps_colinear = 0.97;
    const auto back = model_from_string(model_to_string(params));
    CHECK(back.dims == params.dims);
    CHECK(back.node_enc.weight == params.node_enc.weight);
    CHECK(back.edge_enc.bias == params.edge_enc.bias);
    CHECK(back.msg_enc.weight == params.msg_enc.weight);
    CHECK(back.readout_w == params.readout_w);
    CHECK(back.readout_b == params.readout_b);
    CHECK(back.invariance.frame_gradient == FrameGradient::exact);
    CHECK(back.invariance.eps_colinear == 0.97);
    CHECK(back.invariance.edge_mode == EdgeMode::directed);

    const auto dir = scratch_dir("model");
    save_model(params, dir / "m.json");
    CHECK(load_model(dir / "m.json").readout_w == params.readout_w);
}

TEST_CASE("malformed model files report what is wrong") {
    const auto params = testutil::random_model(2, 3, 4, 2);
    const std::string text = model_to_string(params);
    CHECK(load_error_kind(text.substr(0, text.size() / 2)) == ModelIoError::Kind::truncated);
    CHECK(load_error_kind("") == ModelIoError::Kind::truncated);
    CHECK(load_error_kind("{\"a\": ]   }") == ModelIoError::Kind::parse);

    auto doc = json::parse(text);
    auto edit = [&](auto fn) {
        auto copy = doc;
        fn(copy);
        return load_error_kind(copy.dump());
    };
    CHECK(edit([](json& j) { j["version"] = 99; }) == ModelIoError::Kind::unsupported_version);
    CHECK(edit([](json& j) { j["dims"].erase("d_h"); }) == ModelIoError::Kind::missing_field);
    CHECK(edit([](json& j) { j["dims"]["d_h"] = "wide"; }) == ModelIoError::Kind::bad_field);
    CHECK(edit([](json& j) { j["readout"]["weight"].push_back(1.0); }) == ModelIoError::Kind::dim_mismatch);
    CHECK(edit([](json& j) { j["invariance"]["edge_mode"] = "sideways"; }) == ModelIoError::Kind::bad_field);

    try {
        auto copy = doc;
        copy["dims"].erase("d_h");
        model_from_string(copy.dump());
    } catch (const ModelIoError& e) {
        CHECK(e.field() == "dims.d_h");
    }
    try {
        load_model("/nonexistent/dir/model.json");
        FAIL("expected ModelIoError");
    } catch (const ModelIoError& e) {
        CHECK(e.kind() == ModelIoError::Kind::io);
    }
}

TEST_CASE("configs round-trip and reject unknown keys") {
    auto cfg = small_chain();
    cfg.invariance.frame_gradient = FrameGradient::exact;
    cfg.sampler.method = SamplerMethod::elm;
    cfg.system.placement = Placement::grid;
    cfg.invariance.edge_mode = EdgeMode::shared;
    const auto text = config_to_string(cfg);
    const auto back = config_from_string(text);
    CHECK(config_to_string(back) == text);
    CHECK(back.dims == cfg.dims);
    CHECK(back.system.placement == Placement::grid);
    CHECK(back.invariance.edge_mode == EdgeMode::shared);

    CHECK_THROWS_AS(config_from_string(R"({"preset":"chain8","bogus":1})"), ConfigError);
    CHECK_THROWS_AS(config_from_string(R"({"preset":"chain8","model":{"d_m":0}})"), std::exception);
    const auto over = config_from_string(R"({"preset":"lattice3x3","seed":7})");
    CHECK(over.seed == 7);
    CHECK(over.system.kind == SystemKind::lattice);
    CHECK(load_config("ring").system.kind == SystemKind::ring);
    CHECK_THROWS(load_config("/nonexistent/config.json"));
}

TEST_CASE("dataset directories round-trip exactly") {
    const auto cfg = small_chain();
    Rng rng(3);
    const auto data = generate_dataset(cfg.system.build(), 20, cfg.data.disp, cfg.data.mom, 0.5, rng);
    const auto dir = scratch_dir("data");
    write_dataset_dir(cfg.system, data, dir);
    const auto back = read_dataset_dir(dir);
    CHECK(back.system.n == 4);
    REQUIRE(back.data.test.samples.size() == data.test.samples.size());
    for (std::size_t k = 0; k < data.test.samples.size(); ++k) {
        CHECK(back.data.test.samples[k].state.q == data.test.samples[k].state.q);
        CHECK(back.data.test.samples[k].deriv->p == data.test.samples[k].deriv->p);
    }
    CHECK(back.data.train.anchor.h0 == data.train.anchor.h0);
    CHECK(back.data.train.anchor.state.p == data.train.anchor.state.p);
}

TEST_CASE("zero-shot produces one row per method and test size") {
    auto cfg = small_chain();
    cfg.zero_shot.train_sizes = {4};
    cfg.zero_shot.test_sizes = {4, 6};
    cfg.zero_shot.test_count = 20;
    const auto rows = run_zero_shot(cfg);
    CHECK(rows.size() == 4);
    for (const auto& r : rows) CHECK(std::isfinite(r.relative_error));

    cfg.zero_shot.max_nodes = 5;
    CHECK_THROWS(run_zero_shot(cfg));
}

TEST_CASE("small lattice generalizes to a larger grid with finite error") {
    auto cfg = preset_config("lattice3x3");
    cfg.system.nx = cfg.system.ny = 2;
    cfg.data.count = 100;
    cfg.dims = {3, 8, 24};
    cfg.zero_shot.train_sizes = {2};
    cfg.zero_shot.test_sizes = {10};
    cfg.zero_shot.test_count = 5;
    cfg.zero_shot.methods = {SamplerMethod::swim};
    const auto rows = run_zero_shot(cfg);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].test_nodes == 100);
    CHECK(std::isfinite(rows[0].relative_error));
}

TEST_CASE("the analytic model reproduces the true rollout") {
    const auto cfg = small_chain();
    const auto spec = cfg.system.build();
    const AnalyticHamiltonian model(spec);
    const auto cmp = compare_rollouts(spec, model, rollout_initial_state(cfg, 1), cfg.integration);
    CHECK(cmp.final_state_mse == 0.0);
    CHECK_FALSE(cmp.diverged);
    CHECK(cmp.max_model_drift == cmp.max_true_drift);
    CHECK(cmp.time.size() == cfg.integration.steps + 1);
}

namespace {

/// Finite energy, but the force is undefined away from the initial state.
class Unstable final : public HamiltonianModel {
public:
    double energy(const PhaseState& s) const override { return s.p.squaredNorm(); }
    Vec gradient(const PhaseState& s) const override {
        return Vec::Constant(2 * s.q.size(), std::numeric_limits<double>::quiet_NaN());
    }
};

}  // namespace

TEST_CASE("a failing model rollout is reported as diverged") {
    const auto cfg = small_chain();
    const auto spec = cfg.system.build();
    const auto cmp = compare_rollouts(spec, Unstable{}, rollout_initial_state(cfg, 1), cfg.integration);
    CHECK(cmp.diverged);
    CHECK(cmp.diverged_step == 0);
    CHECK_FALSE(cmp.failure.empty());
    CHECK(std::isinf(cmp.final_state_mse));
    CHECK(std::isinf(cmp.max_model_drift));
    REQUIRE(cmp.state_mse.size() == cfg.integration.steps + 1);
    CHECK(cmp.state_mse[0] == 0.0);
    CHECK(std::isnan(cmp.state_mse[1]));
    CHECK(cmp.max_true_drift < 1e-4);
}

TEST_CASE("single-cell ablation and skipped cells") {
    auto cfg = small_chain();
    cfg.ablation.d_h = {8};
    cfg.ablation.widths = {16};
    auto cells = run_ablation(cfg);
    REQUIRE(cells.size() == 1);
    CHECK(cells[0].d_m == 16);
    CHECK(cells[0].d_l == 24);
    CHECK(std::isfinite(cells[0].test_mse));

    cfg.ablation.axis = AblationAxis::readout;
    cfg.ablation.widths = {8, 16};
    cells = run_ablation(cfg);
    REQUIRE(cells.size() == 2);
    CHECK(cells[0].skipped);
    CHECK_FALSE(cells[1].skipped);
    CHECK(cells[1].d_m == 8);
}

TEST_CASE("CLI runs are deterministic and data files reproduce in-memory training") {
    const auto dir = scratch_dir("cli");
    write_text_file(dir / "cfg.json", config_to_string(small_chain()));
    const std::string cfg = "--config \"" + (dir / "cfg.json").string() + "\"";

    REQUIRE(run_cli("train " + cfg + " --out \"" + (dir / "a").string() + "\"") == 0);
    REQUIRE(run_cli("train " + cfg + " --out \"" + (dir / "b").string() + "\"") == 0);
    CHECK(read_text_file(dir / "a" / "metrics.json") == read_text_file(dir / "b" / "metrics.json"));
    CHECK(read_text_file(dir / "a" / "model.json") == read_text_file(dir / "b" / "model.json"));

    REQUIRE(run_cli("gen-data " + cfg + " --out \"" + (dir / "data").string() + "\"") == 0);
    REQUIRE(run_cli("train " + cfg + " --data \"" + (dir / "data").string() + "\" --out \"" + (dir / "c").string() + "\"") == 0);
    const auto a = json::parse(read_text_file(dir / "a" / "metrics.json"));
    const auto c = json::parse(read_text_file(dir / "c" / "metrics.json"));
    const double ma = a["test"]["mse"].get<double>();
    const double mc = c["test"]["mse"].get<double>();
    CHECK(std::abs(ma - mc) <= 1e-12 * std::abs(ma));

    const auto model = load_model(dir / "a" / "model.json");
    REQUIRE(run_cli("eval " + cfg + " --model \"" + (dir / "a" / "model.json").string() + "\" --data \"" +
                    (dir / "data").string() + "\" --out \"" + (dir / "d").string() + "\"") == 0);
    CHECK(fs::exists(dir / "d" / "metrics.json"));
    CHECK(model.dims.d_h == 8);

    CHECK(run_cli("train --no-such-flag") != 0);
    CHECK(run_cli("train --config /nonexistent/cfg.json --out \"" + (dir / "e").string() + "\"") != 0);
    write_text_file(dir / "bad.json", "{\"preset\": \"chain8\", ");
    CHECK(run_cli("train --config \"" + (dir / "bad.json").string() + "\" --out \"" + (dir / "f").string() + "\"") != 0);
}
