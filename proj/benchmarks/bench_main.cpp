#include <benchmark/benchmark.h>

#include "lylab/cocycles.hpp"
#include "lylab/sections.hpp"
#include "lylab/spectra.hpp"

using namespace lylab;

namespace {

const VectorFieldSpec kLorenz = VectorFieldSpec::lorenz();

void BM_FlowIntegration(benchmark::State& state) {
    IntegratorConfig cfg;
    const Vec3 x0(1, 1, 20);
    for (auto _ : state) {
        auto traj = integrate_flow(kLorenz, x0, 10.0, cfg);
        benchmark::DoNotOptimize(traj.points.back());
    }
}
BENCHMARK(BM_FlowIntegration)->Unit(benchmark::kMillisecond);

void BM_PoincareReturn(benchmark::State& state) {
    IntegratorConfig cfg;
    const CrossSection sec = CrossSection::lorenz_classic(kLorenz);
    for (auto _ : state) {
        auto s = poincare_return(kLorenz, sec, Vec2(2, 5), cfg);
        benchmark::DoNotOptimize(s.fx);
    }
}
BENCHMARK(BM_PoincareReturn)->Unit(benchmark::kMillisecond);

void BM_QrSpectrumChunk(benchmark::State& state) {
    IntegratorConfig cfg;
    const auto gen = CocycleGenerator::random_trig(2, 3, 42, 0.5, true);
    for (auto _ : state) {
        auto spec = qr_lyapunov_flow(gen, kLorenz, Vec3(1, 1, 20), 50.0, 1.0, 5.0, cfg);
        benchmark::DoNotOptimize(spec.exponents);
    }
}
BENCHMARK(BM_QrSpectrumChunk)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
