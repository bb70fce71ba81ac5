#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "test_support.hpp"
#include "trafficnet/extract.hpp"
#include "trafficnet/synth.hpp"

using namespace trafficnet;

namespace {

TripSpec small_spec() {
  TripSpec spec;
  spec.trips = 1;
  spec.device = 100;
  spec.ticks = 2500;
  spec.seed = 3;
  spec.freeflow = 2;
  spec.carfollowing = 2;
  spec.cutin = 1;
  spec.lanechange = 2;
  spec.pedestrian = 1;
  spec.cyclist = 1;
  return spec;
}

std::vector<ScenarioEvent> extract_everything(const SynthOutput& synth,
                                              const ExtractionConfig& cfg = {}) {
  std::vector<ScenarioEvent> events;
  for (const TripBundle& b : partition_rows(synth.tables)) {
    auto trip = extract_trip(b, cfg, ScenarioMask::all());
    events.insert(events.end(), trip.events.begin(), trip.events.end());
  }
  std::sort(events.begin(), events.end(), event_order_less);
  return events;
}

}  // namespace

TEST_CASE("a spec with nothing planted extracts one whole-trip free-flow event") {
  TripSpec spec;
  spec.trips = 1;
  spec.ticks = 500;
  spec.freeflow = 0;
  spec.carfollowing = 0;
  spec.cutin = 0;
  spec.lanechange = 0;
  spec.pedestrian = 0;
  spec.cyclist = 0;
  auto synth = generate(spec);
  CHECK(synth.tables.front_targets.empty());
  REQUIRE(synth.truth.events.size() == 1);
  CHECK(synth.truth.events[0].scenario == Scenario::FreeFlow);
  CHECK(synth.truth.events[0].start_tick == 0);
  CHECK(synth.truth.events[0].end_tick == 499);

  auto extracted = extract_everything(synth);
  REQUIRE(extracted.size() == 1);
  CHECK(extracted[0] == synth.truth.events[0]);
}

TEST_CASE("planted events are recovered exactly by extraction") {
  auto synth = generate(small_spec());
  CHECK(synth.truth.events.size() > 6);
  auto extracted = extract_everything(synth);
  auto report = compare_events(extracted, synth.truth.events);
  INFO(report.summary());
  CHECK(report.ok());
  CHECK(report.matched == synth.truth.events.size());
}

TEST_CASE("generation is deterministic and the layout ignores the seed") {
  TripSpec spec = small_spec();
  auto a = generate(spec);
  auto b = generate(spec);
  CHECK(a.tables.wsu == b.tables.wsu);
  CHECK(a.tables.front_targets == b.tables.front_targets);
  CHECK(a.tables.lanes == b.tables.lanes);
  CHECK(a.truth.events == b.truth.events);

  spec.seed = 99;  // different noise, same planted skeleton
  auto c = generate(spec);
  CHECK(c.truth.events == a.truth.events);
  CHECK(c.tables.lanes != a.tables.lanes);
}

TEST_CASE("an overfull spec is rejected as infeasible") {
  TripSpec spec = small_spec();
  spec.ticks = 300;
  spec.carfollowing = 10;
  spec.lanechange = 5;
  CHECK_THROWS_AS(generate(spec), std::invalid_argument);
}

TEST_CASE("spec files round-trip and validate their bounds") {
  TripSpec spec = small_spec();
  auto again = TripSpec::from_kv(spec.to_kv());
  CHECK(again.ticks == spec.ticks);
  CHECK(again.cutin == spec.cutin);
  CHECK(again.lane_jitter_m == spec.lane_jitter_m);

  KvFile bad = spec.to_kv();
  bad.set_f64("lane_jitter_m", 0.5);  // noise large enough to break the plants
  CHECK_THROWS_AS(TripSpec::from_kv(bad), std::invalid_argument);
}

TEST_CASE("the oracle agrees with extraction on generated corpora") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    TripSpec spec = small_spec();
    spec.seed = seed;
    spec.trips = 2;
    auto synth = generate(spec);
    ExtractionConfig cfg;
    for (const TripBundle& b : partition_rows(synth.tables)) {
      auto trip = extract_trip(b, cfg, ScenarioMask::all());
      auto oracle = oracle_labels(b, cfg);
      auto report = compare_events(trip.events, oracle.events);
      INFO(report.summary());
      CHECK(report.ok());
    }
  }
}

namespace {

// The event-table contract, assertable without the raw data.
void check_event_invariants(const TripExtraction& trip, const ExtractionConfig& cfg) {
  std::map<Scenario, std::int64_t> next_id;
  for (const ScenarioEvent& ev : trip.events) {
    CHECK(ev.start_tick <= ev.end_tick);
    CHECK(ev.event_id == next_id[ev.scenario]);
    ++next_id[ev.scenario];
    if (ev.scenario == Scenario::LaneChange) {
      REQUIRE(ev.cross_time.has_value());
      REQUIRE(ev.x_time1.has_value());
      REQUIRE(ev.x_time2.has_value());
      REQUIRE(ev.change_direction.has_value());
      CHECK(*ev.x_time1 <= *ev.cross_time);
      CHECK(*ev.cross_time <= *ev.x_time2);
      CHECK(*ev.x_time1 >= *ev.cross_time - cfg.lane_pair_window_ticks);
      CHECK(*ev.x_time2 <= *ev.cross_time + cfg.lane_pair_window_ticks);
    }
    if (ev.scenario == Scenario::CutIn) REQUIRE(ev.cut_tick.has_value());
    if (ev.scenario == Scenario::Pedestrian || ev.scenario == Scenario::Cyclist) {
      REQUIRE(ev.obstacle_id.has_value());
    }
  }
}

// Every sequence row belongs to exactly one event and lies inside it.
void check_sequence_containment(const TripExtraction& trip) {
  std::map<std::pair<Scenario, std::int64_t>, const ScenarioEvent*> by_id;
  for (const ScenarioEvent& ev : trip.events) by_id[{ev.scenario, ev.event_id}] = &ev;

  auto contained = [&](Scenario s, std::int64_t id, Tick tick) {
    auto it = by_id.find({s, id});
    REQUIRE(it != by_id.end());
    CHECK(tick >= it->second->start_tick);
    CHECK(tick <= it->second->end_tick);
  };
  for (const auto& row : trip.freeflow_rows) {
    contained(Scenario::FreeFlow, row.event_id, row.sample.key.tick);
  }
  for (const auto& row : trip.carfollow_rows) {
    contained(Scenario::CarFollowing, row.event_id, row.target.key.tick);
  }
  for (const auto& row : trip.cutin_rows) contained(Scenario::CutIn, row.event_id, row.tick());
  for (const auto& row : trip.lanechange_rows) {
    contained(Scenario::LaneChange, row.event_id, row.lane.key.tick);
  }
  for (const auto& row : trip.pedestrian_rows) {
    contained(Scenario::Pedestrian, row.event_id, row.target.key.tick);
  }
  for (const auto& row : trip.cyclist_rows) {
    contained(Scenario::Cyclist, row.event_id, row.target.key.tick);
  }
}

}  // namespace

TEST_CASE("the oracle agrees with extraction on unplanted random bundles") {
  std::mt19937_64 rng(1234);
  ExtractionConfig cfg;
  for (int iter = 0; iter < 40; ++iter) {
    TripBundle b = tsup::dense_bundle(200 + static_cast<Tick>(rng() % 200));
    Tick ticks = b.bounds().end + 1;
    if (iter % 3 == 0) b.summary.reset();  // derive bounds from observed ticks
    // random traffic: a few tracks with random cipv flags and types
    for (std::int64_t obstacle = 1; obstacle <= 5; ++obstacle) {
      Tick t = static_cast<Tick>(rng() % 40);
      int type = static_cast<int>(rng() % 6);
      while (t < ticks) {
        b.front_targets.push_back(
            tsup::front(t, obstacle, rng() % 4 == 0, type, 10.0, 0.0));
        t += 1 + static_cast<Tick>(rng() % 13);
      }
    }
    std::sort(b.front_targets.begin(), b.front_targets.end(), [](const auto& x, const auto& y) {
      return std::pair(x.key.tick, x.obstacle_id) < std::pair(y.key.tick, y.obstacle_id);
    });
    // random lane wobble with occasional jumps
    for (auto& lane : b.lanes) {
      lane.lane_dis_l += (static_cast<double>(rng() % 100) - 50.0) / 400.0;
      lane.lane_dis_r += (static_cast<double>(rng() % 100) - 50.0) / 400.0;
      if (rng() % 97 == 0) lane.lane_dis_l -= 3.0;
      if (rng() % 89 == 0) lane.lane_dis_r += 2.6;
      if (rng() % 23 == 0) lane.quality_left = static_cast<int>(rng() % 4);
      if (rng() % 23 == 0) lane.quality_right = static_cast<int>(rng() % 4);
    }

    auto trip = extract_trip(b, cfg, ScenarioMask::all());
    auto oracle = oracle_labels(b, cfg);
    auto report = compare_events(trip.events, oracle.events);
    INFO("iteration " << iter << "\n" << report.summary());
    CHECK(report.ok());
    check_event_invariants(trip, cfg);
    check_sequence_containment(trip);

    // per-tick labels agree with the emitted rows
    std::set<Tick> freeflow_rows;
    for (const auto& row : trip.freeflow_rows) freeflow_rows.insert(row.sample.key.tick);
    CHECK(freeflow_rows == std::set<Tick>(oracle.freeflow_ticks.begin(),
                                          oracle.freeflow_ticks.end()));
    std::set<std::pair<Tick, std::int64_t>> follow_rows;
    for (const auto& row : trip.carfollow_rows) {
      follow_rows.emplace(row.target.key.tick, row.target.obstacle_id);
    }
    CHECK(follow_rows == std::set<std::pair<Tick, std::int64_t>>(oracle.carfollow.begin(),
                                                                 oracle.carfollow.end()));
  }
}

TEST_CASE("ground truth survives the CSV round trip") {
  auto synth = generate(small_spec());
  tsup::TempDir dir;
  write_ground_truth(synth.truth.events, dir.path / "gt.csv");
  auto back = read_ground_truth(dir.path / "gt.csv");
  CHECK(back == synth.truth.events);
}

TEST_CASE("comparator classifies identical, shifted, missing and extra events") {
  auto synth = generate(small_spec());
  const auto& truth = synth.truth.events;

  auto all_matched = compare_events(truth, truth);
  CHECK(all_matched.ok());
  CHECK(all_matched.matched == truth.size());

  // one boundary off by one tick: a field mismatch, not a miss
  auto shifted = truth;
  shifted[0].end_tick += 1;
  auto report = compare_events(shifted, truth);
  CHECK(report.matched == truth.size() - 1);
  CHECK(report.missed.empty());
  CHECK(report.spurious.empty());
  REQUIRE(report.mismatches.size() == 1);
  CHECK(report.mismatches[0].fields == "end_tick");

  // empty extraction: everything missed
  auto empty = compare_events({}, truth);
  CHECK(empty.missed.size() == truth.size());
  CHECK_FALSE(empty.ok());

  // an extra extracted event is spurious
  auto extra = truth;
  ScenarioEvent stray;
  stray.scenario = Scenario::CutIn;
  stray.trip = {999, 1};
  stray.event_id = 0;
  extra.push_back(stray);
  auto spurious = compare_events(extra, truth);
  REQUIRE(spurious.spurious.size() == 1);
  CHECK(spurious.spurious[0].trip.device == 999);
}

TEST_CASE("compare reports serialize to CSV with one row per difference") {
  auto synth = generate(small_spec());
  auto shifted = synth.truth.events;
  shifted[0].end_tick += 2;
  auto report = compare_events(shifted, synth.truth.events);
  tsup::TempDir dir;
  report.write_csv(dir.path / "report.csv");
  auto text = tsup::read_file(dir.path / "report.csv");
  CHECK(text.find("Status,Scenario,Device,Trip,EventId,Field,Expected,Actual") == 0);
  CHECK(text.find("mismatch") != std::string::npos);
  CHECK(text.find("end_tick") != std::string::npos);
}

TEST_CASE("multi-trip specs produce one bundle per trip with consistent truth") {
  TripSpec spec = small_spec();
  spec.trips = 3;
  auto synth = generate(spec);
  auto bundles = partition_rows(synth.tables);
  REQUIRE(bundles.size() == 3);
  for (const auto& b : bundles) {
    CHECK(b.summary.has_value());
    CHECK(b.bounds() == TickRange{0, spec.ticks - 1});
  }
  auto extracted = extract_everything(synth);
  auto report = compare_events(extracted, synth.truth.events);
  INFO(report.summary());
  CHECK(report.ok());
}
