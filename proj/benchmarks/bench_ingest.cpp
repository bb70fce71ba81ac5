#include <benchmark/benchmark.h>

#include <filesystem>
#include <map>

#include "trafficnet/ingest.hpp"
#include "trafficnet/synth.hpp"

namespace {

using namespace trafficnet;

std::filesystem::path corpus_dir(int trips, Tick ticks) {
  static std::map<std::pair<int, Tick>, std::filesystem::path> cache;
  auto key = std::make_pair(trips, ticks);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  TripSpec spec;
  spec.trips = trips;
  spec.ticks = ticks;
  spec.carfollowing = 3;
  spec.cutin = 2;
  spec.lanechange = 2;
  spec.pedestrian = 2;
  spec.cyclist = 1;
  auto dir = std::filesystem::temp_directory_path() /
             ("trafficnet-bench-" + std::to_string(trips) + "-" + std::to_string(ticks));
  write_raw_tables(generate(spec).tables, dir);
  cache[key] = dir;
  return dir;
}

void BM_LoadWsuTable(benchmark::State& state) {
  auto dir = corpus_dir(static_cast<int>(state.range(0)), 4000);
  std::uint64_t rows = 0;
  for (auto _ : state) {
    rows = 0;
    load_wsu_table(dir / "DataWsu.csv", [&](const WsuSample&) { ++rows; }, nullptr);
    benchmark::DoNotOptimize(rows);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(rows) * state.iterations());
}

void BM_BundleStreamSorted(benchmark::State& state) {
  auto dir = corpus_dir(static_cast<int>(state.range(0)), 4000);
  for (auto _ : state) {
    PartitionOptions options;
    options.input_dir = dir;
    BundleStream stream(options, nullptr);
    std::uint64_t rows = 0;
    while (auto bundle = stream.next()) rows += bundle->wsu.size();
    benchmark::DoNotOptimize(rows);
  }
}

BENCHMARK(BM_LoadWsuTable)->Arg(4)->Arg(16);
BENCHMARK(BM_BundleStreamSorted)->Arg(4)->Arg(16);

}  // namespace
