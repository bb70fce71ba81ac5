#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "trafficnet/segments.hpp"

using namespace trafficnet;

namespace {

// Oracle: group by scanning every consecutive pair.
std::vector<TickRange> runs_by_pair_scan(const std::vector<Tick>& ticks, Tick max_gap) {
  std::vector<TickRange> out;
  for (std::size_t i = 0; i < ticks.size(); ++i) {
    bool starts_run = i == 0 || ticks[i] - ticks[i - 1] > max_gap;
    if (starts_run) out.push_back({ticks[i], ticks[i]});
    else out.back().end = ticks[i];
  }
  return out;
}

}  // namespace

TEST_CASE("empty tick list yields no runs") {
  CHECK(segment_runs({}, 1).empty());
}

TEST_CASE("two gap-separated blocks become two runs") {
  std::vector<Tick> ticks;
  for (Tick t = 0; t <= 29; ++t) ticks.push_back(t);
  for (Tick t = 61; t <= 99; ++t) ticks.push_back(t);
  auto runs = segment_runs(ticks, 1);
  REQUIRE(runs.size() == 2);
  CHECK(runs[0] == TickRange{0, 29});
  CHECK(runs[1] == TickRange{61, 99});
}

TEST_CASE("random tick sets match the pairwise-scan oracle") {
  std::mt19937_64 rng(101);
  for (int iter = 0; iter < 300; ++iter) {
    std::set<Tick> set;
    std::uniform_int_distribution<Tick> tick_dist(0, 400);
    int n = static_cast<int>(rng() % 120);
    for (int i = 0; i < n; ++i) set.insert(tick_dist(rng));
    std::vector<Tick> ticks(set.begin(), set.end());
    Tick max_gap = 1 + static_cast<Tick>(rng() % 5);

    CHECK(segment_runs(ticks, max_gap) == runs_by_pair_scan(ticks, max_gap));
  }
}

TEST_CASE("runs are disjoint, ordered, and cover exactly the input ticks") {
  std::mt19937_64 rng(77);
  for (int iter = 0; iter < 100; ++iter) {
    std::set<Tick> set;
    for (int i = 0; i < 60; ++i) set.insert(static_cast<Tick>(rng() % 300));
    std::vector<Tick> ticks(set.begin(), set.end());
    auto runs = segment_runs(ticks, 2);

    Tick prev_end = -10;
    std::size_t covered = 0;
    for (const TickRange& r : runs) {
      CHECK(r.start > prev_end);
      CHECK(r.start <= r.end);
      prev_end = r.end;
      for (Tick t : ticks) {
        if (r.contains(t)) ++covered;
      }
      CHECK(set.count(r.start) == 1);
      CHECK(set.count(r.end) == 1);
    }
    CHECK(covered == ticks.size());
  }
}

TEST_CASE("interval complement: no holes, one hole, full hole") {
  CHECK(complement_within({0, 99}, {}) == std::vector<TickRange>{{0, 99}});

  std::vector<TickRange> one{{43, 57}};
  CHECK(complement_within({0, 99}, one) == std::vector<TickRange>({{0, 42}, {58, 99}}));

  std::vector<TickRange> all{{0, 99}};
  CHECK(complement_within({0, 99}, all).empty());
}

TEST_CASE("complement matches per-tick membership on random holes") {
  std::mt19937_64 rng(303);
  for (int iter = 0; iter < 200; ++iter) {
    TickRange span{0, 199};
    std::vector<TickRange> holes;
    int n = static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) {
      Tick a = static_cast<Tick>(rng() % 220) - 10;
      Tick b = a + static_cast<Tick>(rng() % 30);
      holes.push_back({a, b});
    }
    auto segments = complement_within(span, holes);

    for (Tick t = span.start; t <= span.end; ++t) {
      bool in_hole = false;
      for (const TickRange& h : holes) {
        if (t >= h.start && t <= h.end) in_hole = true;
      }
      bool in_segment = false;
      for (const TickRange& s : segments) {
        if (s.contains(t)) in_segment = true;
      }
      CHECK(in_segment == !in_hole);
    }
  }
}
