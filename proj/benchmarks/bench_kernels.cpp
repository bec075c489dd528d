// Parallel kernels vs their serial references on realistic fixtures.

#include <benchmark/benchmark.h>

#include <vector>

#include "mbpm/charfunc.hpp"
#include "mbpm/moments.hpp"
#include "mbpm/synth.hpp"
#include "mbpm/trade.hpp"

namespace {

using namespace mbpm;

struct Fixture {
  std::vector<TradeTick> ticks;
  std::vector<Window> windows;

  Fixture() {
    SynthConfig cfg;
    cfg.seed = 12345;
    cfg.n_ticks = 1'000'000;
    cfg.tick_spacing = 0.05;
    cfg.price.kind = PriceProcess::Kind::random_walk;
    cfg.price.level = 100.0;
    cfg.price.step_vol = 0.002;
    cfg.volume.kind = VolumeDist::Kind::uniform_levels;
    cfg.volume.levels = {1.0, 2.0, 5.0, 10.0};
    ticks = generate(cfg);
    windows = partition(ticks, WindowSpec{0.0, 250.0});
  }
};

const Fixture& fixture() {
  static Fixture f;
  return f;
}

void BM_ReportWindows(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state)
    benchmark::DoNotOptimize(report_windows(f.windows, 4));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(f.ticks.size()));
}
BENCHMARK(BM_ReportWindows)->Unit(benchmark::kMillisecond);

void BM_ReportWindowsSerial(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state)
    benchmark::DoNotOptimize(report_windows_serial(f.windows, 4));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(f.ticks.size()));
}
BENCHMARK(BM_ReportWindowsSerial)->Unit(benchmark::kMillisecond);

void BM_InvertCharFunc(benchmark::State& state) {
  const CharFuncApprox fit{3, {100.0, 4.0, 1.5}};
  for (auto _ : state)
    benchmark::DoNotOptimize(invert_charfunc(fit));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * 4096);
}
BENCHMARK(BM_InvertCharFunc)->Unit(benchmark::kMillisecond);

void BM_InvertCharFuncSerial(benchmark::State& state) {
  const CharFuncApprox fit{3, {100.0, 4.0, 1.5}};
  for (auto _ : state)
    benchmark::DoNotOptimize(invert_charfunc_serial(fit));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * 4096);
}
BENCHMARK(BM_InvertCharFuncSerial)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
