#include "trafficnet/validate.hpp"

#include <cmath>

namespace trafficnet {

std::string Rejection::to_line() const {
  std::string line;
  line.reserve(table.size() + device.size() + trip.size() + time.size() + reason.size() + 4);
  line += table;
  line += ',';
  line += device;
  line += ',';
  line += trip;
  line += ',';
  line += time;
  line += ',';
  line += reason;
  return line;
}

namespace {

std::optional<std::string> validate_keys(const RowKey& key) {
  if (key.trip.device < 0) return "device out of range";
  if (key.trip.trip < 0) return "trip out of range";
  if (key.tick < 0) return "time out of range";
  return std::nullopt;
}

// NaN slips through plain range comparisons, so every floating field gets a
// finiteness gate first.
std::optional<std::string> require_finite(std::initializer_list<double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) return "non-finite value";
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> validate_sample(const WsuSample& s) {
  if (auto err = validate_keys(s.key)) return err;
  if (auto err = require_finite({s.latitude, s.longitude, s.heading, s.speed})) return err;
  if (s.latitude < -90.0 || s.latitude > 90.0) return "latitude out of range";
  if (s.longitude < -180.0 || s.longitude > 180.0) return "longitude out of range";
  if (s.heading < 0.0 || s.heading >= 360.0) return "heading out of range";
  if (s.speed < 0.0) return "speed out of range";
  return std::nullopt;
}

std::optional<std::string> validate_sample(const FrontTargetSample& s) {
  if (auto err = validate_keys(s.key)) return err;
  if (auto err = require_finite({s.range_d, s.lateral_l, s.range_rate})) return err;
  if (s.obstacle_id < 0) return "obstacle id out of range";
  if (s.cipv != 0 && s.cipv != 1) return "cipv out of range";
  if (s.range_d < 0.0) return "range out of range";
  return std::nullopt;
}

std::optional<std::string> validate_sample(const LaneSample& s) {
  if (auto err = validate_keys(s.key)) return err;
  if (auto err = require_finite({s.lane_dis_l, s.lane_dis_r})) return err;
  if (s.quality_left < 0 || s.quality_left > 3) return "quality out of range";
  if (s.quality_right < 0 || s.quality_right > 3) return "quality out of range";
  if (s.quality_left > 1 && s.quality_right > 1 && s.lane_dis_l > s.lane_dis_r) {
    return "lane distances out of order";
  }
  return std::nullopt;
}

std::optional<std::string> validate_sample(const TripSummaryRow& s) {
  if (s.key.device < 0) return "device out of range";
  if (s.key.trip < 0) return "trip out of range";
  if (auto err = require_finite({s.distance_m, s.distance_over_25mph_m})) return err;
  if (s.start_tick < 0) return "start time out of range";
  if (s.start_tick > s.end_tick) return "start time after end time";
  if (s.distance_m < 0.0) return "distance out of range";
  if (s.distance_over_25mph_m < 0.0) return "distance out of range";
  return std::nullopt;
}

}  // namespace trafficnet
