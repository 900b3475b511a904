// OpenMP kernels against their serial references on the 60,000-state
// reference configuration. Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>
#include <omp.h>

#include "vaoi/sim.hpp"

using namespace vaoi;

namespace {

SystemParams reference() { return {3, 5, 9, 0.2, 0.5, {0.1, 0.2, 0.3}, {0.2, 0.2, 0.2}}; }

const TransitionKernel& kernel() {
    static const TransitionKernel k = build_kernel(reference());
    return k;
}

const std::vector<double>& costs() {
    static const std::vector<double> c = state_costs(StateSpace(reference()));
    return c;
}

void BM_BuildKernel(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(build_kernel(reference()));
    state.counters["threads"] = omp_get_max_threads();
}

void BM_BuildKernelSerial(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(build_kernel_serial(reference()));
}

void BM_Rvi(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(relative_value_iteration(kernel(), costs()));
    state.counters["threads"] = omp_get_max_threads();
}

void BM_RviSerial(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(relative_value_iteration_serial(kernel(), costs()));
}

SimOptions sim_options() {
    SimOptions o;
    o.replications = 64;
    return o;
}

void BM_Simulate(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(simulate(reference(), PolicySpec::greedy(), sim_options()));
    state.counters["threads"] = omp_get_max_threads();
}

void BM_SimulateSerial(benchmark::State& state) {
    for (auto _ : state)
        benchmark::DoNotOptimize(simulate_serial(reference(), PolicySpec::greedy(), sim_options()));
}

}  // namespace

BENCHMARK(BM_BuildKernel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BuildKernelSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Rvi)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RviSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Simulate)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimulateSerial)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
