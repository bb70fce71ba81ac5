#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trafficnet/ingest.hpp"
#include "trafficnet/kv.hpp"
#include "trafficnet/types.hpp"

namespace trafficnet {

/// What to plant in a generated corpus. Stored as a flat key=value file.
///
/// The event layout (scenario shapes, positions, obstacle ids) is a pure
/// function of the structural fields; `seed` drives only bounded noise
/// (lane jitter, quality dropout, kinematics), so two specs differing only
/// in seed share identical ground truth.
struct TripSpec {
  std::int64_t trips = 1;
  std::int64_t device = 100;
  std::int64_t first_trip = 1;
  Tick ticks = 3000;
  std::uint64_t seed = 0;

  int freeflow = 2;  // minimum free-flow runs to carve per trip
  int carfollowing = 2;
  int cutin = 1;
  int lanechange = 1;
  int pedestrian = 1;
  int cyclist = 1;

  double lane_jitter_m = 0.03;    // <= 0.05 so planted predicates stay intact
  double quality_dropout = 0.02;  // <= 0.05, never inside protected windows

  static TripSpec from_kv(const KvFile& kv);
  static TripSpec load(const std::filesystem::path& path);
  KvFile to_kv() const;

  std::optional<std::string> validate() const;
};

/// Expected extraction output for a generated corpus, plus per-tick labels
/// for the row-level scenarios.
struct GroundTruth {
  std::vector<ScenarioEvent> events;  // sorted by event_order_less

  struct TripLabels {
    std::vector<Tick> freeflow_ticks;
    std::vector<std::pair<Tick, std::int64_t>> carfollow;  // (tick, cipv obstacle)
  };
  std::map<TripKey, TripLabels> labels;
};

struct SynthOutput {
  RawTables tables;  // sorted by (device, trip, time)
  GroundTruth truth;
};

/// Deterministic corpus generation. Planted events satisfy every detection
/// predicate of the extractors at default thresholds; filler ticks satisfy
/// none. Throws std::invalid_argument when the requested events cannot fit
/// in the trip length.
SynthOutput generate(const TripSpec& spec);

/// CSV persistence for the expected-event table (gen writes it next to the
/// raw tables; verify reads it back).
inline constexpr std::string_view kGroundTruthFile = "ground_truth.csv";
void write_ground_truth(std::span<const ScenarioEvent> events,
                        const std::filesystem::path& file);
std::vector<ScenarioEvent> read_ground_truth(const std::filesystem::path& file);

/// Brute-force per-tick labeling of one trip, re-derived from the raw tables
/// with no code shared with the extractors. O(ticks x obstacles); intended
/// for trips up to ~1e5 ticks.
struct OracleLabels {
  TripKey key;
  std::vector<Tick> freeflow_ticks;
  std::vector<std::pair<Tick, std::int64_t>> carfollow;  // (tick, obstacle)
  std::vector<Tick> cut_ticks;
  std::vector<ScenarioEvent> events;  // event boundaries derived per tick
};

OracleLabels oracle_labels(const TripBundle& bundle, const ExtractionConfig& cfg);

/// Event-level diff. Events pair up by (scenario, device, trip, event_id);
/// paired events with any differing field count as mismatches, unpaired
/// expected events as missed, unpaired actual events as spurious.
struct CompareReport {
  std::uint64_t matched = 0;

  struct Mismatch {
    ScenarioEvent expected;
    ScenarioEvent actual;
    std::string fields;  // space-separated names of differing fields
  };
  std::vector<ScenarioEvent> missed;
  std::vector<ScenarioEvent> spurious;
  std::vector<Mismatch> mismatches;

  bool ok() const { return missed.empty() && spurious.empty() && mismatches.empty(); }

  std::string summary() const;
  void write_csv(const std::filesystem::path& file) const;
};

CompareReport compare_events(std::span<const ScenarioEvent> actual,
                             std::span<const ScenarioEvent> expected);

}  // namespace trafficnet
