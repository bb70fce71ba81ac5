#include "trafficnet/types.hpp"

#include <tuple>

namespace trafficnet {

std::string_view scenario_name(Scenario s) {
  switch (s) {
    case Scenario::FreeFlow: return "freeflow";
    case Scenario::CarFollowing: return "carfollowing";
    case Scenario::CutIn: return "cutin";
    case Scenario::LaneChange: return "lanechange";
    case Scenario::Pedestrian: return "pedestrian";
    case Scenario::Cyclist: return "cyclist";
  }
  return "unknown";
}

std::optional<Scenario> scenario_from_name(std::string_view name) {
  for (Scenario s : kAllScenarios) {
    if (scenario_name(s) == name) return s;
  }
  return std::nullopt;
}

std::string_view change_direction_name(ChangeDirection d) {
  return d == ChangeDirection::Left ? "Left" : "Right";
}

std::optional<ChangeDirection> change_direction_from_name(std::string_view name) {
  if (name == "Left") return ChangeDirection::Left;
  if (name == "Right") return ChangeDirection::Right;
  return std::nullopt;
}

bool event_order_less(const ScenarioEvent& a, const ScenarioEvent& b) {
  return std::tuple(static_cast<int>(a.scenario), a.trip.device, a.trip.trip, a.event_id) <
         std::tuple(static_cast<int>(b.scenario), b.trip.device, b.trip.trip, b.event_id);
}

std::optional<std::string> ExtractionConfig::validate() const {
  if (half_width_m <= 0) return "half_width_m must be positive";
  if (lane_jump_min_m <= 0) return "lane_jump_min_m must be positive";
  if (lane_jump_max_m <= 0) return "lane_jump_max_m must be positive";
  if (lane_jump_min_m >= lane_jump_max_m) return "lane_jump_min_m must be < lane_jump_max_m";
  if (lane_pair_window_ticks <= 0) return "lane_pair_window_ticks must be positive";
  if (lane_dedup_ticks <= 0) return "lane_dedup_ticks must be positive";
  if (quality_min < 0) return "quality_min must be >= 0";
  if (cutin_window_ticks <= 0) return "cutin_window_ticks must be positive";
  if (pedestrian_min_rows <= 0) return "pedestrian_min_rows must be positive";
  if (cyclist_min_rows <= 0) return "cyclist_min_rows must be positive";
  if (freeflow_gap_ticks <= 0) return "freeflow_gap_ticks must be positive";
  if (track_gap_ticks <= 0) return "track_gap_ticks must be positive";
  return std::nullopt;
}

}  // namespace trafficnet
