#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace trafficnet {

/// Sample index at the 10 Hz logging rate: 10 ticks = 1 second.
using Tick = std::int64_t;

inline constexpr Tick kTicksPerSecond = 10;

/// Identifies one trip of one instrumented vehicle.
struct TripKey {
  std::int64_t device = 0;
  std::int64_t trip = 0;

  friend auto operator<=>(const TripKey&, const TripKey&) = default;
};

/// Identifies one sample row within a trip.
struct RowKey {
  TripKey trip;
  Tick tick = 0;

  friend auto operator<=>(const RowKey&, const RowKey&) = default;
};

/// GPS + CAN state logged by the on-board wireless safety unit.
struct WsuSample {
  RowKey key;
  double latitude = 0.0;   // degrees, [-90, 90]
  double longitude = 0.0;  // degrees, [-180, 180]
  double heading = 0.0;    // degrees clockwise from true north, [0, 360)
  double speed = 0.0;      // m/s, >= 0

  friend bool operator==(const WsuSample&, const WsuSample&) = default;
};

/// Target-type codes reported by the front-facing vision sensor.
inline constexpr int kTargetTypePedestrian = 3;
inline constexpr int kTargetTypeCyclist = 4;

/// One tracked obstacle observation from the front-facing vision sensor.
/// Several obstacles may be observed at the same tick.
struct FrontTargetSample {
  RowKey key;
  std::int64_t obstacle_id = 0;
  int target_type = 0;     // 3 = pedestrian, 4 = cyclist, other = vehicle/unknown
  int cipv = 0;            // 1 when this obstacle is the closest in-path vehicle
  double range_d = 0.0;    // m, longitudinal distance, >= 0
  double lateral_l = 0.0;  // m, lateral distance, positive to the left
  double range_rate = 0.0; // m/s

  friend bool operator==(const FrontTargetSample&, const FrontTargetSample&) = default;
};

/// Distances from the vehicle center to the lane boundaries.
/// lane_dis_l <= 0 when the left boundary lies left of center,
/// lane_dis_r >= 0 when the right boundary lies right of center.
struct LaneSample {
  RowKey key;
  double lane_dis_l = 0.0;
  double lane_dis_r = 0.0;
  int quality_left = 0;   // 0..3, usable when > 1
  int quality_right = 0;  // 0..3, usable when > 1

  friend bool operator==(const LaneSample&, const LaneSample&) = default;
};

/// Per-trip roll-up logged by the acquisition system.
struct TripSummaryRow {
  TripKey key;
  Tick start_tick = 0;
  Tick end_tick = 0;
  double distance_m = 0.0;
  std::int64_t brake_count = 0;
  double distance_over_25mph_m = 0.0;

  friend bool operator==(const TripSummaryRow&, const TripSummaryRow&) = default;
};

enum class Scenario {
  FreeFlow,
  CarFollowing,
  CutIn,
  LaneChange,
  Pedestrian,
  Cyclist,
};

inline constexpr std::array<Scenario, 6> kAllScenarios = {
    Scenario::FreeFlow,   Scenario::CarFollowing, Scenario::CutIn,
    Scenario::LaneChange, Scenario::Pedestrian,   Scenario::Cyclist,
};

/// Stable lowercase identifier used for file names and CLI selectors.
std::string_view scenario_name(Scenario s);

/// Inverse of scenario_name; nullopt for unknown names.
std::optional<Scenario> scenario_from_name(std::string_view name);

enum class ChangeDirection { Left, Right };

std::string_view change_direction_name(ChangeDirection d);
std::optional<ChangeDirection> change_direction_from_name(std::string_view name);

/// One labeled scenario occurrence. Fields beyond [start_tick, end_tick]
/// are populated per scenario:
///   LaneChange:          cross_time, change_direction, x_time1, x_time2
///   CutIn:               cut_tick
///   Pedestrian/Cyclist:  obstacle_id
struct ScenarioEvent {
  Scenario scenario = Scenario::FreeFlow;
  TripKey trip;
  std::int64_t event_id = 0;
  Tick start_tick = 0;
  Tick end_tick = 0;

  std::optional<Tick> cross_time;
  std::optional<ChangeDirection> change_direction;
  std::optional<Tick> x_time1;
  std::optional<Tick> x_time2;
  std::optional<Tick> cut_tick;
  std::optional<std::int64_t> obstacle_id;

  friend bool operator==(const ScenarioEvent&, const ScenarioEvent&) = default;
};

/// Canonical output order: (scenario, device, trip, event_id).
bool event_order_less(const ScenarioEvent& a, const ScenarioEvent& b);

/// Tunable thresholds of the extractors. Defaults reproduce the published
/// detection rules; every field can be overridden from a key=value file.
struct ExtractionConfig {
  double half_width_m = 0.91;       // half the average sedan width
  double lane_jump_min_m = 2.0;     // exclusive lower bound of a boundary jump
  double lane_jump_max_m = 4.0;     // exclusive upper bound of a boundary jump
  Tick lane_pair_window_ticks = 10; // left/right jumps must pair within 1 s
  Tick lane_dedup_ticks = 20;       // candidates closer than 2 s are redundant
  int quality_min = 1;              // lane samples usable when quality > this
  Tick cutin_window_ticks = 50;     // sequence half-width around the cut tick
  int pedestrian_min_rows = 5;
  int cyclist_min_rows = 2;
  Tick freeflow_gap_ticks = 1;      // free-flow events split at larger gaps
  Tick track_gap_ticks = 10;        // beyond this gap a track counts as new
  bool cutin_same_track_only = true; // require a prior observation of the track

  /// Violated-rule description, or nullopt when the config is usable.
  std::optional<std::string> validate() const;
};

}  // namespace trafficnet
