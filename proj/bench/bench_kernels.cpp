// Serial reference vs OpenMP kernels, and float vs double forward evaluation.

#include "rfhgn/experiments.hpp"
#include "rfhgn/kernels.hpp"

#include <benchmark/benchmark.h>

using namespace rfhgn;

namespace {

struct Fixture {
    GeneratedData data;
    ModelParams params;
};

const Fixture& fixture() {
    static const Fixture f = [] {
        auto cfg = preset_config("lattice3x3");
        cfg.data.count = 512;
        Fixture out;
        Rng data_rng(streams_for(1).data_seed);
        out.data = generate_dataset(cfg.system.build(), cfg.data.count, cfg.data.disp, cfg.data.mom, 0.5, data_rng);
        Rng model_rng(streams_for(1).model_seed);
        out.params = train(out.data.train, cfg.dims, cfg.sampler, cfg.solver, model_rng).params;
        return out;
    }();
    return f;
}

ExecPolicy policy_arg(const benchmark::State& state) {
    return state.range(0) == 0 ? ExecPolicy::serial : ExecPolicy::parallel;
}

void BM_FillJacobian(benchmark::State& state) {
    const auto& f = fixture();
    const auto& samples = f.data.train.samples;
    const auto& topo = f.data.train.topology;
    Mat out(static_cast<Eigen::Index>(samples.size()) * 2 * topo.coord_size(), f.params.dims.d_l());
    for (auto _ : state) {
        fill_jacobian_rows(f.params, topo, samples, out, policy_arg(state));
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(samples.size()));
    state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}
BENCHMARK(BM_FillJacobian)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_BatchGradients(benchmark::State& state) {
    const auto& f = fixture();
    const auto& samples = f.data.test.samples;
    for (auto _ : state) {
        auto g = batch_gradients(f.params, f.data.test.topology, samples, policy_arg(state));
        benchmark::DoNotOptimize(g.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(samples.size()));
    state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}
BENCHMARK(BM_BatchGradients)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Hamiltonians(benchmark::State& state) {
    const auto& f = fixture();
    const auto& samples = f.data.test.samples;
    const auto precision = state.range(0) == 0 ? Precision::double_precision : Precision::single_precision;
    for (auto _ : state) {
        auto h = batch_hamiltonians(f.params, f.data.test.topology, samples, ExecPolicy::serial, precision);
        benchmark::DoNotOptimize(h.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(samples.size()));
    state.SetLabel(state.range(0) == 0 ? "double" : "float");
}
BENCHMARK(BM_Hamiltonians)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
