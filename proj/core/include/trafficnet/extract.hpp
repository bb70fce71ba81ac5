#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "trafficnet/ingest.hpp"
#include "trafficnet/segments.hpp"
#include "trafficnet/types.hpp"

namespace trafficnet {

/// Maximal interval of a trip that contains no lane-change span
/// [x_time1, x_time2]. Car-following and cut-in detection run inside these.
struct NoChangeSegment {
  TripKey key;
  TickRange range;

  friend bool operator==(const NoChangeSegment&, const NoChangeSegment&) = default;
};

/// Per-tick record of which obstacle is the closest in-path vehicle.
/// At most one obstacle per tick; when the raw data claims several, the
/// lowest obstacle id wins and the conflict is counted.
struct CipvTimeline {
  TripKey key;
  std::vector<std::pair<Tick, std::int64_t>> entries;  // strictly increasing ticks
  std::uint64_t conflicting_ticks = 0;
};

CipvTimeline build_cipv_timeline(const TripBundle& bundle);

/// A left-boundary/right-boundary jump pair found by the two-wheel scan.
/// The left jump tick is recorded as the event's CrossTime.
struct LaneChangeCandidate {
  Tick left_jump_tick = 0;
  Tick right_jump_tick = 0;
  ChangeDirection direction = ChangeDirection::Left;
  double left_jump_m = 0.0;
  double right_jump_m = 0.0;
};

/// Scans consecutive usable-quality lane samples for boundary-distance jumps
/// inside (lane_jump_min_m, lane_jump_max_m) and pairs left jumps with
/// same-signed right jumps at most lane_pair_window_ticks apart. Both jumps
/// negative = left change, both positive = right change.
std::vector<LaneChangeCandidate> detect_two_wheel_change(std::span<const LaneSample> lanes,
                                                         const ExtractionConfig& cfg);

/// Resolves when the near-side wheels first reach the target lane (x_time1,
/// within 1 s before cross_time) and when the far-side wheels last remain on
/// the old lane (x_time2, within 1 s after). nullopt when either window has
/// no qualifying sample.
std::optional<std::pair<Tick, Tick>> compute_wheel_exist_time(std::span<const LaneSample> lanes,
                                                              Tick cross_time,
                                                              ChangeDirection direction,
                                                              const ExtractionConfig& cfg);

/// Vehicle GPS/CAN state joined onto a sequence row.
struct GpsFix {
  double latitude = 0.0;
  double longitude = 0.0;
  double heading = 0.0;
  double speed = 0.0;

  friend bool operator==(const GpsFix&, const GpsFix&) = default;
};

struct FreeFlowSeqRow {
  std::int64_t event_id = 0;
  WsuSample sample;
};

struct CarFollowSeqRow {
  std::int64_t event_id = 0;
  FrontTargetSample target;
  std::optional<GpsFix> gps;
};

struct LaneChangeSeqRow {
  std::int64_t event_id = 0;
  LaneSample lane;
  std::optional<GpsFix> gps;
};

/// Cut-in sequences carry every raw row around the cut tick.
struct CutInSeqRow {
  std::int64_t event_id = 0;
  std::variant<WsuSample, FrontTargetSample, LaneSample> payload;
  std::optional<GpsFix> gps;

  Tick tick() const;
};

struct VruSeqRow {
  std::int64_t event_id = 0;
  FrontTargetSample target;
  std::optional<GpsFix> gps;  // absent when no WsuSample shares the tick
};

struct FreeFlowOutput {
  std::vector<ScenarioEvent> events;
  std::vector<FreeFlowSeqRow> rows;
};

struct LaneChangeOutput {
  std::vector<ScenarioEvent> events;
  std::vector<LaneChangeSeqRow> rows;
  std::uint64_t candidates = 0;
  std::uint64_t unresolved = 0;  // dropped: no qualifying sample in an XTime window
  std::uint64_t deduped = 0;     // dropped: within lane_dedup_ticks of a kept event
};

struct CarFollowOutput {
  std::vector<ScenarioEvent> events;
  std::vector<CarFollowSeqRow> rows;
  std::uint64_t cipv_conflicting_ticks = 0;
};

struct CutInOutput {
  std::vector<ScenarioEvent> events;
  std::vector<CutInSeqRow> rows;
};

struct VruOutput {
  std::vector<ScenarioEvent> events;
  std::vector<VruSeqRow> rows;
  std::uint64_t deleted_events = 0;  // below the min-rows threshold
  std::uint64_t rows_without_gps = 0;
};

/// A WsuSample is free flow iff no FrontTargetSample shares its row key.
/// Qualifying ticks group into events at gaps larger than freeflow_gap_ticks.
FreeFlowOutput extract_free_flow(const TripBundle& bundle, const ExtractionConfig& cfg);

/// Two-wheel-change detection, XTime resolution, then dedup: of candidates
/// whose cross times lie within lane_dedup_ticks, only the earliest stays.
LaneChangeOutput extract_lane_change(const TripBundle& bundle, const ExtractionConfig& cfg);

/// Trip extent minus the [x_time1, x_time2] spans of the lane-change events.
std::vector<NoChangeSegment> build_no_change_segments(const TripBundle& bundle,
                                                      std::span<const ScenarioEvent> lane_changes);

/// Maximal consecutive-tick runs of an unchanged CIPV obstacle inside one
/// no-change segment.
CarFollowOutput extract_car_following(const TripBundle& bundle,
                                      std::span<const NoChangeSegment> segments,
                                      const ExtractionConfig& cfg);

/// A cut-in happens where a track's CIPV flag flips 0 -> 1 between
/// consecutive observations (at most track_gap_ticks apart) inside a
/// no-change segment. The sequence covers +-cutin_window_ticks around the
/// cut tick, clipped to the trip extent.
CutInOutput extract_cut_in(const TripBundle& bundle, std::span<const NoChangeSegment> segments,
                           const ExtractionConfig& cfg);

/// Groups matching-type front-target rows into encounters: a new event
/// starts when the obstacle id changes or the same obstacle reappears after
/// more than track_gap_ticks. Events shorter than min_rows are deleted and
/// the survivors renumbered from zero.
VruOutput extract_vru(const TripBundle& bundle, int target_type, int min_rows,
                      const ExtractionConfig& cfg);

VruOutput extract_pedestrian(const TripBundle& bundle, const ExtractionConfig& cfg);
VruOutput extract_cyclist(const TripBundle& bundle, const ExtractionConfig& cfg);

class ScenarioMask {
 public:
  static ScenarioMask all();
  static ScenarioMask only(Scenario s);

  void set(Scenario s, bool enabled) { enabled_[static_cast<int>(s)] = enabled; }
  bool contains(Scenario s) const { return enabled_[static_cast<int>(s)]; }
  bool is_all() const;

 private:
  std::array<bool, 6> enabled_{};
};

struct ExtractionCounters {
  std::uint64_t lane_candidates = 0;
  std::uint64_t lane_unresolved = 0;
  std::uint64_t lane_deduped = 0;
  std::uint64_t cipv_conflicting_ticks = 0;
  std::uint64_t vru_events_deleted = 0;
  std::uint64_t vru_rows_without_gps = 0;
};

/// Everything extracted from one trip. Events are ordered by
/// (scenario, event_id); row vectors are time-ordered per event.
struct TripExtraction {
  TripKey key;
  std::vector<ScenarioEvent> events;
  std::vector<FreeFlowSeqRow> freeflow_rows;
  std::vector<CarFollowSeqRow> carfollow_rows;
  std::vector<CutInSeqRow> cutin_rows;
  std::vector<LaneChangeSeqRow> lanechange_rows;
  std::vector<VruSeqRow> pedestrian_rows;
  std::vector<VruSeqRow> cyclist_rows;
  ExtractionCounters counters;
};

/// Runs the selected extractors over one bundle. Lane changes are always
/// detected when car-following or cut-in is selected (they exclude
/// lane-change spans) but their events are only emitted when selected.
TripExtraction extract_trip(const TripBundle& bundle, const ExtractionConfig& cfg,
                            const ScenarioMask& mask);

}  // namespace trafficnet
