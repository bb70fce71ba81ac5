#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trafficnet/types.hpp"

namespace trafficnet {

struct GeoPoint {
  double latitude = 0.0;
  double longitude = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Meters per degree of latitude in the local equirectangular frame.
inline constexpr double kMetersPerDegree = 111320.0;

/// Places a point seen at (range_d forward, lateral_l left) in the vehicle
/// frame onto the globe. Heading is degrees clockwise from true north; the
/// metric/angular conversion is the equirectangular approximation around the
/// vehicle, adequate for sensor-range offsets.
///
/// Throws std::domain_error for |latitude| >= 89 (near-pole).
GeoPoint vehicle_frame_to_global(const GeoPoint& vehicle, double heading_deg, double range_d,
                                 double lateral_l);

/// Exact inverse of vehicle_frame_to_global under the same approximation:
/// returns (range_d, lateral_l) of `target` in the vehicle frame.
std::pair<double, double> global_to_vehicle_frame(const GeoPoint& vehicle, double heading_deg,
                                                  const GeoPoint& target);

struct GeoJsonResult {
  std::string document;
  std::size_t omitted = 0;  // events without a resolvable start position
};

/// Renders events as a GeoJSON FeatureCollection of Point features
/// (coordinates [longitude, latitude], properties scenario/device/trip/
/// event_id/start_tick). `positions` runs parallel to `events`; events with
/// no position are omitted and counted.
GeoJsonResult emit_geojson(std::span<const ScenarioEvent> events,
                           std::span<const std::optional<GeoPoint>> positions);

}  // namespace trafficnet
