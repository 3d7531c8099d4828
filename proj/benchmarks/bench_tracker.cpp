#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <vector>

#include <vfoa/em.hpp>
#include <vfoa/synth.hpp>
#include <vfoa/tracker.hpp>

namespace {

using namespace vfoa;

// N tracked persons on a unit circle, M objects on a circle of radius 4.
SynthConfig ring_scene(int n_active, int m_passive, int frames) {
  std::vector<Target> targets;
  for (int k = 1; k <= n_active; ++k) targets.push_back({k, TargetKind::Active, true, ""});
  for (int k = 1; k <= m_passive; ++k) targets.push_back({n_active + k, TargetKind::Passive, false, ""});
  SynthConfig cfg;
  cfg.scene = Scene(targets);
  cfg.params = easy_preset_params();
  cfg.table = easy_preset_table();
  cfg.T = frames;
  cfg.seed = 7;
  cfg.motion.resize(static_cast<std::size_t>(n_active + m_passive + 1));
  for (int k = 1; k <= n_active; ++k) {
    const double a = 2.0 * std::numbers::pi * (k - 1) / n_active;
    cfg.motion[k] = TargetMotion{{std::cos(a), std::sin(a), 1.7}};
  }
  for (int k = 1; k <= m_passive; ++k) {
    const double a = 2.0 * std::numbers::pi * (k - 0.5) / m_passive;
    cfg.motion[n_active + k] = TargetMotion{{4.0 * std::cos(a), 4.0 * std::sin(a), 1.5}};
  }
  return cfg;
}

void BM_TrackerUpdate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int m = static_cast<int>(state.range(1));
  const SynthConfig cfg = ring_scene(n, m, 64);
  const Recording rec = sample_recording(cfg).recording;
  const TrackerState start = initialize(rec.scene, rec.frames.front(), cfg.params, cfg.table);
  TrackerState st = start;
  std::size_t f = 1;
  for (auto _ : state) {
    st = update(st, rec.frames[f], cfg.params, cfg.table);
    benchmark::DoNotOptimize(st);
    if (++f == rec.frames.size()) {
      f = 1;
      st = start;
    }
  }
  state.counters["labels"] = n + m;
}
BENCHMARK(BM_TrackerUpdate)->ArgsProduct({{1, 2, 3}, {0, 2, 4, 6}})->Unit(benchmark::kMicrosecond);

void BM_KalmanSmoother(benchmark::State& state) {
  SynthConfig cfg = easy_scene_preset();
  cfg.T = static_cast<int>(state.range(0));
  const Recording rec = sample_recording(cfg).recording;
  const std::vector<EmSequence> seqs = make_sequences(RecordingSet{rec});
  for (auto _ : state) {
    benchmark::DoNotOptimize(kalman_smoother(seqs.front(), cfg.params));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KalmanSmoother)->Arg(250)->Arg(1000)->Arg(4000)->Unit(benchmark::kMicrosecond);

void BM_EmIteration(benchmark::State& state) {
  SynthConfig cfg = easy_scene_preset();
  cfg.T = 1000;
  const Recording rec = sample_recording(cfg).recording;
  EmOptions opts;
  opts.max_iters = 1;
  opts.tol = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(em_fit(RecordingSet{rec}, ModelParams::standard_init(), opts));
  }
}
BENCHMARK(BM_EmIteration)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
