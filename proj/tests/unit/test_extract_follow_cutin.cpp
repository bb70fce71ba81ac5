#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <random>

#include "test_support.hpp"
#include "trafficnet/extract.hpp"

using namespace trafficnet;

namespace {

ScenarioEvent lane_change_event(Tick x1, Tick x2, TripKey key = tsup::kTrip) {
  ScenarioEvent ev;
  ev.scenario = Scenario::LaneChange;
  ev.trip = key;
  ev.start_tick = x1;
  ev.end_tick = x2;
  ev.x_time1 = x1;
  ev.x_time2 = x2;
  ev.cross_time = x1;
  ev.change_direction = ChangeDirection::Left;
  return ev;
}

// Oracle: per-tick (cipv, obstacle) labels intersected with per-tick
// segment membership, grouped by scanning consecutive ticks.
std::vector<std::pair<TickRange, std::int64_t>> follow_runs_per_tick(
    const TripBundle& b, std::span<const NoChangeSegment> segments) {
  std::map<Tick, std::int64_t> label;
  for (const auto& f : b.front_targets) {
    if (f.cipv != 1) continue;
    auto it = label.find(f.key.tick);
    if (it == label.end() || f.obstacle_id < it->second) label[f.key.tick] = f.obstacle_id;
  }
  auto in_segment = [&](Tick t) {
    for (const auto& s : segments) {
      if (s.range.contains(t)) return true;
    }
    return false;
  };
  std::vector<std::pair<TickRange, std::int64_t>> runs;
  std::optional<Tick> prev;
  for (const auto& [t, obstacle] : label) {
    if (!in_segment(t)) {
      prev.reset();
      continue;
    }
    if (prev && *prev == t - 1 && runs.back().second == obstacle) {
      runs.back().first.end = t;
    } else {
      runs.push_back({{t, t}, obstacle});
    }
    prev = t;
  }
  return runs;
}

}  // namespace

TEST_CASE("no-change segments: no lane changes means the whole trip") {
  TripBundle b = tsup::dense_bundle(100);
  auto segments = build_no_change_segments(b, {});
  REQUIRE(segments.size() == 1);
  CHECK(segments[0].range == TickRange{0, 99});
}

TEST_CASE("one lane change splits the trip around its wheel interval") {
  TripBundle b = tsup::dense_bundle(100);
  std::vector<ScenarioEvent> changes{lane_change_event(43, 57)};
  auto segments = build_no_change_segments(b, changes);
  REQUIRE(segments.size() == 2);
  CHECK(segments[0].range == TickRange{0, 42});
  CHECK(segments[1].range == TickRange{58, 99});
}

TEST_CASE("random intervals match per-tick complement membership") {
  std::mt19937_64 rng(5);
  for (int iter = 0; iter < 50; ++iter) {
    TripBundle b = tsup::dense_bundle(200);
    std::vector<ScenarioEvent> changes;
    Tick cursor = 10;
    while (cursor < 180 && (rng() % 3) != 0) {
      Tick len = static_cast<Tick>(rng() % 15);
      changes.push_back(lane_change_event(cursor, cursor + len));
      cursor += len + 2 + static_cast<Tick>(rng() % 30);
    }
    auto segments = build_no_change_segments(b, changes);
    for (Tick t = 0; t < 200; ++t) {
      bool in_change = false;
      for (const auto& ev : changes) {
        if (t >= *ev.x_time1 && t <= *ev.x_time2) in_change = true;
      }
      bool in_segment = false;
      for (const auto& s : segments) {
        if (s.range.contains(t)) in_segment = true;
      }
      CHECK(in_segment != in_change);
    }
  }
}

TEST_CASE("no cipv rows, no car-following events") {
  TripBundle b = tsup::dense_bundle(100);
  for (Tick t = 0; t < 100; ++t) b.front_targets.push_back(tsup::front(t, 4, 0));
  auto segments = build_no_change_segments(b, {});
  auto out = extract_car_following(b, segments, {});
  CHECK(out.events.empty());
  CHECK(out.rows.empty());
}

TEST_CASE("an obstacle change starts a new event with the next id") {
  TripBundle b = tsup::dense_bundle(60);
  for (Tick t = 0; t <= 9; ++t) b.front_targets.push_back(tsup::front(t, 7, 0));
  for (Tick t = 10; t <= 49; ++t) b.front_targets.push_back(tsup::front(t, 7, 1));
  for (Tick t = 50; t <= 59; ++t) b.front_targets.push_back(tsup::front(t, 9, 1));
  auto segments = build_no_change_segments(b, {});
  auto out = extract_car_following(b, segments, {});

  REQUIRE(out.events.size() == 2);
  CHECK(out.events[0].event_id == 0);
  CHECK(out.events[0].start_tick == 10);
  CHECK(out.events[0].end_tick == 49);
  CHECK(out.events[1].event_id == 1);
  CHECK(out.events[1].start_tick == 50);
  CHECK(out.events[1].end_tick == 59);

  auto oracle = follow_runs_per_tick(b, segments);
  REQUIRE(oracle.size() == out.events.size());
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    CHECK(out.events[i].start_tick == oracle[i].first.start);
    CHECK(out.events[i].end_tick == oracle[i].first.end);
  }
}

TEST_CASE("a run spanning a lane change splits at the wheel interval") {
  TripBundle b = tsup::dense_bundle(100);
  for (Tick t = 20; t <= 80; ++t) b.front_targets.push_back(tsup::front(t, 7, 1));
  std::vector<ScenarioEvent> changes{lane_change_event(43, 57)};
  auto segments = build_no_change_segments(b, changes);
  auto out = extract_car_following(b, segments, {});

  REQUIRE(out.events.size() == 2);
  CHECK(out.events[0].start_tick == 20);
  CHECK(out.events[0].end_tick == 42);
  CHECK(out.events[1].start_tick == 58);
  CHECK(out.events[1].end_tick == 80);

  auto oracle = follow_runs_per_tick(b, segments);
  REQUIRE(oracle.size() == 2);
  CHECK(oracle[0].first == TickRange{20, 42});
  CHECK(oracle[1].first == TickRange{58, 80});

  for (const auto& row : out.rows) {
    CHECK(row.target.cipv == 1);
    CHECK(row.target.obstacle_id == 7);
    bool in_change = row.target.key.tick >= 43 && row.target.key.tick <= 57;
    CHECK_FALSE(in_change);
  }
}

TEST_CASE("an observation gap breaks a car-following run") {
  TripBundle b = tsup::dense_bundle(40);
  for (Tick t = 0; t <= 30; ++t) {
    if (t == 15) continue;  // one missing tick
    b.front_targets.push_back(tsup::front(t, 7, 1));
  }
  auto segments = build_no_change_segments(b, {});
  auto out = extract_car_following(b, segments, {});
  REQUIRE(out.events.size() == 2);
  CHECK(out.events[0].end_tick == 14);
  CHECK(out.events[1].start_tick == 16);
}

TEST_CASE("conflicting cipv claims resolve to the lowest obstacle and are counted") {
  TripBundle b = tsup::dense_bundle(20);
  for (Tick t = 0; t < 10; ++t) {
    b.front_targets.push_back(tsup::front(t, 9, 1));
    b.front_targets.push_back(tsup::front(t, 3, 1));
  }
  auto timeline = build_cipv_timeline(b);
  CHECK(timeline.conflicting_ticks == 10);
  for (const auto& [tick, obstacle] : timeline.entries) CHECK(obstacle == 3);

  auto out = extract_car_following(b, build_no_change_segments(b, {}), {});
  REQUIRE(out.events.size() == 1);
  for (const auto& row : out.rows) CHECK(row.target.obstacle_id == 3);
}

// ---------------------------------------------------------------------------
// Cut-in
// ---------------------------------------------------------------------------

namespace {

// Oracle: for each observation with cipv=1, scan all earlier observations of
// the same obstacle for the nearest one and test the transition conditions.
std::vector<Tick> cut_ticks_by_scan(const TripBundle& b,
                                    std::span<const NoChangeSegment> segments,
                                    const ExtractionConfig& cfg) {
  std::vector<Tick> cuts;
  for (const auto& row : b.front_targets) {
    if (row.cipv != 1) continue;
    bool inside = false;
    for (const auto& s : segments) {
      if (s.range.contains(row.key.tick)) inside = true;
    }
    if (!inside) continue;
    const FrontTargetSample* prev = nullptr;
    for (const auto& other : b.front_targets) {
      if (other.obstacle_id != row.obstacle_id || other.key.tick >= row.key.tick) continue;
      if (!prev || other.key.tick > prev->key.tick) prev = &other;
    }
    if (prev && row.key.tick - prev->key.tick <= cfg.track_gap_ticks && prev->cipv == 0) {
      cuts.push_back(row.key.tick);
    }
  }
  return cuts;
}

}  // namespace

TEST_CASE("constant cipv through the trip is never a cut-in") {
  TripBundle b = tsup::dense_bundle(100);
  for (Tick t = 0; t < 100; ++t) b.front_targets.push_back(tsup::front(t, 7, 1));
  auto out = extract_cut_in(b, build_no_change_segments(b, {}), {});
  CHECK(out.events.empty());
}

TEST_CASE("a 0-to-1 flip with a prior observation is a cut-in with a clipped window") {
  TripBundle b = tsup::dense_bundle(200);
  for (Tick t = 90; t <= 150; ++t) b.front_targets.push_back(tsup::front(t, 7, t >= 100));
  ExtractionConfig cfg;
  auto segments = build_no_change_segments(b, {});
  auto out = extract_cut_in(b, segments, cfg);

  REQUIRE(out.events.size() == 1);
  const ScenarioEvent& ev = out.events[0];
  CHECK(ev.cut_tick == 100);
  CHECK(ev.start_tick == 50);
  CHECK(ev.end_tick == 150);
  CHECK(ev.event_id == 0);

  auto oracle = cut_ticks_by_scan(b, segments, cfg);
  REQUIRE(oracle.size() == 1);
  CHECK(oracle[0] == 100);

  // Sequence rows draw on every raw table inside the window.
  for (const auto& row : out.rows) {
    CHECK(row.tick() >= 50);
    CHECK(row.tick() <= 150);
  }
  std::size_t wsu_rows = 0, target_rows = 0, lane_rows = 0;
  for (const auto& row : out.rows) {
    wsu_rows += std::holds_alternative<WsuSample>(row.payload);
    target_rows += std::holds_alternative<FrontTargetSample>(row.payload);
    lane_rows += std::holds_alternative<LaneSample>(row.payload);
  }
  CHECK(wsu_rows == 101);
  CHECK(lane_rows == 101);
  CHECK(target_rows == 61);
}

TEST_CASE("the window clips at the trip end") {
  TripBundle b = tsup::dense_bundle(120);
  for (Tick t = 80; t <= 119; ++t) b.front_targets.push_back(tsup::front(t, 7, t >= 100));
  auto out = extract_cut_in(b, build_no_change_segments(b, {}), {});
  REQUIRE(out.events.size() == 1);
  CHECK(out.events[0].start_tick == 50);
  CHECK(out.events[0].end_tick == 119);
}

TEST_CASE("a flip inside a lane-change interval is excluded") {
  TripBundle b = tsup::dense_bundle(200);
  for (Tick t = 90; t <= 150; ++t) b.front_targets.push_back(tsup::front(t, 7, t >= 100));
  std::vector<ScenarioEvent> changes{lane_change_event(95, 105)};
  auto segments = build_no_change_segments(b, changes);
  auto out = extract_cut_in(b, segments, {});
  CHECK(out.events.empty());
  CHECK(cut_ticks_by_scan(b, segments, {}).empty());
}

TEST_CASE("a track first seen with cipv set is not a cut-in") {
  TripBundle b = tsup::dense_bundle(200);
  for (Tick t = 100; t <= 150; ++t) b.front_targets.push_back(tsup::front(t, 7, 1));
  auto out = extract_cut_in(b, build_no_change_segments(b, {}), {});
  CHECK(out.events.empty());
}

TEST_CASE("an observation gap beyond the tolerance restarts the track") {
  TripBundle b = tsup::dense_bundle(300);
  b.front_targets.push_back(tsup::front(100, 7, 0));
  // 15 ticks later: same id, but the track counts as new
  for (Tick t = 115; t <= 130; ++t) b.front_targets.push_back(tsup::front(t, 7, 1));
  ExtractionConfig cfg;
  auto segments = build_no_change_segments(b, {});
  CHECK(extract_cut_in(b, segments, cfg).events.empty());
  CHECK(cut_ticks_by_scan(b, segments, cfg).empty());

  // With the same-track requirement relaxed, the re-acquired track counts.
  cfg.cutin_same_track_only = false;
  auto relaxed = extract_cut_in(b, segments, cfg);
  REQUIRE(relaxed.events.size() == 1);
  CHECK(relaxed.events[0].cut_tick == 115);
}

TEST_CASE("random traffic agrees with the transition-scan oracle") {
  std::mt19937_64 rng(17);
  ExtractionConfig cfg;
  for (int iter = 0; iter < 60; ++iter) {
    TripBundle b = tsup::dense_bundle(150);
    for (std::int64_t obstacle = 1; obstacle <= 4; ++obstacle) {
      Tick t = static_cast<Tick>(rng() % 30);
      while (t < 150) {
        int cipv = (rng() % 3) == 0 ? 1 : 0;
        b.front_targets.push_back(tsup::front(t, obstacle, cipv));
        t += 1 + static_cast<Tick>(rng() % 14);
      }
    }
    std::sort(b.front_targets.begin(), b.front_targets.end(), [](const auto& a, const auto& c) {
      return std::pair(a.key.tick, a.obstacle_id) < std::pair(c.key.tick, c.obstacle_id);
    });
    auto segments = build_no_change_segments(b, {});
    auto out = extract_cut_in(b, segments, cfg);
    auto oracle = cut_ticks_by_scan(b, segments, cfg);
    std::sort(oracle.begin(), oracle.end());
    REQUIRE(out.events.size() == oracle.size());
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      CHECK(out.events[i].cut_tick == oracle[i]);
    }
  }
}
