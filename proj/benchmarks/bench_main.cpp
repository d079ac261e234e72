#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "spinsim/circuits.hpp"
#include "spinsim/device.hpp"
#include "spinsim/fitting.hpp"
#include "spinsim/reference_states.hpp"
#include "spinsim/simulator.hpp"
#include "spinsim/tomography.hpp"

using namespace spinsim;

namespace {

Circuit cluster_measurement(const DeviceConfig& cfg, int setting) {
  return measurement_circuit(StateKind::Cluster3, default_state_timing(cfg), enumerate_settings()[setting], cfg);
}

void BM_EvolveCluster(benchmark::State& state) {
  const DeviceConfig cfg = default_device_config();
  const Circuit c = cluster_measurement(cfg, 0);
  const NoiseRealization r = draw_noise(cfg, 1);
  for (auto _ : state) {
    CMatrix rho = rho_init().matrix();
    evolve_inplace(c, r, cfg, rho, true);
    benchmark::DoNotOptimize(rho.data());
  }
}
BENCHMARK(BM_EvolveCluster);

void BM_RunShots(benchmark::State& state) {
  const DeviceConfig cfg = default_device_config();
  const Circuit c = cluster_measurement(cfg, 5);
  const RunSpec spec{static_cast<int>(state.range(0)), 3, true, true};
  for (auto _ : state) benchmark::DoNotOptimize(run_shots(c, spec, cfg, 5));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RunShots)->Arg(100)->Arg(1000);

void BM_LinearInversion(benchmark::State& state) {
  const ExpectationSet e = ExpectationSet::exact(depolarize(rho_cluster(), 0.8));
  for (auto _ : state) benchmark::DoNotOptimize(linear_inversion(e));
}
BENCHMARK(BM_LinearInversion);

void BM_FitRabi(benchmark::State& state) {
  std::vector<double> t, y;
  std::mt19937_64 gen(4);
  std::normal_distribution<double> n(0.0, 0.01);
  for (int i = 0; i < 200; ++i) {
    t.push_back(i * 5e-9);
    y.push_back(0.5 - 0.5 * std::exp(-t.back() / 1e-6) * std::cos(2 * M_PI * 5e6 * t.back()) + n(gen));
  }
  for (auto _ : state) benchmark::DoNotOptimize(fit_rabi(t, y));
}
BENCHMARK(BM_FitRabi);

void BM_FitBimodal(benchmark::State& state) {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> a(0.0, 1.0), b(6.0, 1.0);
  std::vector<double> s;
  for (int i = 0; i < 5000; ++i) s.push_back(i % 2 ? a(gen) : b(gen));
  for (auto _ : state) benchmark::DoNotOptimize(fit_bimodal(s));
}
BENCHMARK(BM_FitBimodal);

}  // namespace

BENCHMARK_MAIN();
