#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "coldloop/coldloop.hpp"

using namespace coldloop;

static void BM_PlantStep(benchmark::State& state) {
    Plant plant;
    const ActuatorCommand cmd{0.55, 0.6, true, true};
    for (auto _ : state) {
        plant.step(cmd, 1e-3);
        benchmark::DoNotOptimize(plant.temperature());
    }
}
BENCHMARK(BM_PlantStep);

static void BM_CompileSchedule(benchmark::State& state) {
    const StimulusSpec spec{StimulusKind::S1, -0.24, 0.5, 0.06, 15.0, 5.0};
    for (auto _ : state) benchmark::DoNotOptimize(compile_schedule(spec));
}
BENCHMARK(BM_CompileSchedule);

// One 15 s trial at 1 ms steps.
static void BM_RunControlTrial(benchmark::State& state) {
    const PlantParams params;
    const auto timeline = schedule_to_timeline(
        compile_schedule({StimulusKind::S1, -0.16, 0.5, 0.06, 15.0, 5.0}),
        exact_valve_model(params), exact_led_model(params));
    Plant plant(params);
    for (auto _ : state) {
        plant.reset();
        benchmark::DoNotOptimize(run_control(timeline, plant));
    }
}
BENCHMARK(BM_RunControlTrial)->Unit(benchmark::kMillisecond);

static void BM_Perceive(benchmark::State& state) {
    std::vector<double> temps(1500);
    for (std::size_t i = 0; i < temps.size(); ++i) temps[i] = 33.0 - 0.0016 * static_cast<double>(i);
    const ParticipantModel model;
    for (auto _ : state) benchmark::DoNotOptimize(perceive(temps, 100.0, model));
}
BENCHMARK(BM_Perceive);

static void BM_Calibrate(benchmark::State& state) {
    for (auto _ : state) {
        Plant plant;
        benchmark::DoNotOptimize(calibrate(plant));
    }
}
BENCHMARK(BM_Calibrate)->Unit(benchmark::kMillisecond);

static std::vector<std::vector<double>> random_groups(int k, int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> likert(1, 7);
    std::vector<std::vector<double>> g(k, std::vector<double>(n));
    for (auto& x : g)
        for (auto& v : x) v = likert(rng);
    return g;
}

static void BM_KruskalWallis(benchmark::State& state) {
    const auto groups = random_groups(5, static_cast<int>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(stats::kruskal_wallis(groups));
}
BENCHMARK(BM_KruskalWallis)->Arg(45)->Arg(225);

static void BM_WilcoxonExact(benchmark::State& state) {
    std::vector<double> a, b;
    for (int i = 0; i < 10; ++i) {
        a.push_back(2.0 * i);
        b.push_back(2.0 * i + 1.3);
    }
    for (auto _ : state) benchmark::DoNotOptimize(stats::wilcoxon_rank_sum(a, b));
}
BENCHMARK(BM_WilcoxonExact);

static void BM_WilcoxonNormal(benchmark::State& state) {
    const auto g = random_groups(2, 225, 2);
    for (auto _ : state) benchmark::DoNotOptimize(stats::wilcoxon_rank_sum(g[0], g[1]));
}
BENCHMARK(BM_WilcoxonNormal);

static void BM_BenjaminiHochberg(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> p(static_cast<std::size_t>(state.range(0)));
    for (auto& v : p) v = u(rng);
    for (auto _ : state) benchmark::DoNotOptimize(stats::benjamini_hochberg(p));
}
BENCHMARK(BM_BenjaminiHochberg)->Arg(15)->Arg(1000);
BENCHMARK_MAIN();
