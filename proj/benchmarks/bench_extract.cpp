#include <benchmark/benchmark.h>

#include "trafficnet/extract.hpp"
#include "trafficnet/synth.hpp"

namespace {

using namespace trafficnet;

TripBundle bench_bundle(Tick ticks) {
  TripSpec spec;
  spec.ticks = ticks;
  spec.carfollowing = 4;
  spec.cutin = 3;
  spec.lanechange = 3;
  spec.pedestrian = 2;
  spec.cyclist = 1;
  auto bundles = partition_rows(generate(spec).tables);
  return bundles.front();
}

void BM_ExtractTripAll(benchmark::State& state) {
  TripBundle bundle = bench_bundle(state.range(0));
  ExtractionConfig cfg;
  for (auto _ : state) {
    auto out = extract_trip(bundle, cfg, ScenarioMask::all());
    benchmark::DoNotOptimize(out.events.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(bundle.wsu.size()) * state.iterations());
}

void BM_ExtractFreeFlow(benchmark::State& state) {
  TripBundle bundle = bench_bundle(state.range(0));
  ExtractionConfig cfg;
  for (auto _ : state) {
    auto out = extract_free_flow(bundle, cfg);
    benchmark::DoNotOptimize(out.events.data());
  }
}

void BM_DetectTwoWheelChange(benchmark::State& state) {
  TripBundle bundle = bench_bundle(state.range(0));
  ExtractionConfig cfg;
  for (auto _ : state) {
    auto candidates = detect_two_wheel_change(bundle.lanes, cfg);
    benchmark::DoNotOptimize(candidates.data());
  }
}

void BM_OracleLabels(benchmark::State& state) {
  TripBundle bundle = bench_bundle(state.range(0));
  ExtractionConfig cfg;
  for (auto _ : state) {
    auto labels = oracle_labels(bundle, cfg);
    benchmark::DoNotOptimize(labels.events.data());
  }
}

BENCHMARK(BM_ExtractTripAll)->Arg(4000)->Arg(16000);
BENCHMARK(BM_ExtractFreeFlow)->Arg(4000)->Arg(16000);
BENCHMARK(BM_DetectTwoWheelChange)->Arg(4000)->Arg(16000);
BENCHMARK(BM_OracleLabels)->Arg(4000);

}  // namespace
