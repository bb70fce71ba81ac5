#include "trafficnet/geo.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace trafficnet {

namespace {

constexpr double kPi = 3.14159265358979323846;

double deg_to_rad(double deg) { return deg * kPi / 180.0; }

void check_latitude(double latitude) {
  if (std::abs(latitude) >= 89.0) {
    throw std::domain_error("latitude too close to a pole for the local frame");
  }
}

void append_coord(std::string& out, double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9f", value);
  out += buf;
}

}  // namespace

GeoPoint vehicle_frame_to_global(const GeoPoint& vehicle, double heading_deg, double range_d,
                                 double lateral_l) {
  check_latitude(vehicle.latitude);
  const double h = deg_to_rad(heading_deg);
  // Compass bearing h has north/east components (cos h, sin h); left of the
  // forward axis is (sin h, -cos h).
  const double north = range_d * std::cos(h) + lateral_l * std::sin(h);
  const double east = range_d * std::sin(h) - lateral_l * std::cos(h);

  GeoPoint out;
  out.latitude = vehicle.latitude + north / kMetersPerDegree;
  out.longitude =
      vehicle.longitude + east / (kMetersPerDegree * std::cos(deg_to_rad(vehicle.latitude)));
  return out;
}

std::pair<double, double> global_to_vehicle_frame(const GeoPoint& vehicle, double heading_deg,
                                                  const GeoPoint& target) {
  check_latitude(vehicle.latitude);
  const double h = deg_to_rad(heading_deg);
  const double north = (target.latitude - vehicle.latitude) * kMetersPerDegree;
  const double east = (target.longitude - vehicle.longitude) * kMetersPerDegree *
                      std::cos(deg_to_rad(vehicle.latitude));

  const double range_d = north * std::cos(h) + east * std::sin(h);
  const double lateral_l = north * std::sin(h) - east * std::cos(h);
  return {range_d, lateral_l};
}

GeoJsonResult emit_geojson(std::span<const ScenarioEvent> events,
                           std::span<const std::optional<GeoPoint>> positions) {
  GeoJsonResult result;
  std::string& out = result.document;
  out.reserve(128 + events.size() * 192);
  out += "{\"type\":\"FeatureCollection\",\"features\":[";

  bool first = true;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const std::optional<GeoPoint>& pos = i < positions.size() ? positions[i] : std::nullopt;
    if (!pos) {
      ++result.omitted;
      continue;
    }
    const ScenarioEvent& ev = events[i];
    if (!first) out += ',';
    first = false;
    out += "{\"type\":\"Feature\",\"geometry\":{\"type\":\"Point\",\"coordinates\":[";
    append_coord(out, pos->longitude);
    out += ',';
    append_coord(out, pos->latitude);
    out += "]},\"properties\":{\"scenario\":\"";
    out += scenario_name(ev.scenario);
    out += "\",\"device\":";
    out += std::to_string(ev.trip.device);
    out += ",\"trip\":";
    out += std::to_string(ev.trip.trip);
    out += ",\"event_id\":";
    out += std::to_string(ev.event_id);
    out += ",\"start_tick\":";
    out += std::to_string(ev.start_tick);
    out += "}}";
  }
  out += "]}";
  out += '\n';
  return result;
}

}  // namespace trafficnet
