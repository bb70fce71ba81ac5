#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <random>

#include "trafficnet/geo.hpp"

using namespace trafficnet;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Oracle: haversine on the WGS-84 mean radius.
double great_circle_m(const GeoPoint& a, const GeoPoint& b) {
  const double r = 6371008.8;
  const double phi1 = a.latitude * kPi / 180.0, phi2 = b.latitude * kPi / 180.0;
  const double dphi = phi2 - phi1;
  const double dlambda = (b.longitude - a.longitude) * kPi / 180.0;
  const double h = std::sin(dphi / 2) * std::sin(dphi / 2) +
                   std::cos(phi1) * std::cos(phi2) * std::sin(dlambda / 2) * std::sin(dlambda / 2);
  return 2.0 * r * std::asin(std::sqrt(h));
}

}  // namespace

TEST_CASE("zero offsets map to the vehicle position") {
  GeoPoint v{42.28, -83.74};
  CHECK(vehicle_frame_to_global(v, 123.0, 0.0, 0.0) == v);
}

TEST_CASE("heading north moves latitude by the metric conversion") {
  GeoPoint v{42.28, -83.74};
  GeoPoint out = vehicle_frame_to_global(v, 0.0, 10.0, 0.0);
  CHECK(out.latitude - v.latitude == doctest::Approx(10.0 / 111320.0).epsilon(1e-12));
  CHECK(out.longitude == doctest::Approx(v.longitude).epsilon(1e-12));
}

TEST_CASE("heading east moves longitude scaled by cos(latitude)") {
  GeoPoint v{42.28, -83.74};
  GeoPoint out = vehicle_frame_to_global(v, 90.0, 10.0, 0.0);
  double expected = 10.0 / (111320.0 * std::cos(42.28 * kPi / 180.0));
  CHECK(out.longitude - v.longitude == doctest::Approx(expected).epsilon(1e-12));
  CHECK(out.latitude == doctest::Approx(v.latitude).epsilon(1e-12));
}

TEST_CASE("a positive lateral offset lands left of the heading") {
  GeoPoint v{42.0, -83.0};
  // facing north, left is west: longitude decreases
  GeoPoint out = vehicle_frame_to_global(v, 0.0, 0.0, 5.0);
  CHECK(out.longitude < v.longitude);
  CHECK(out.latitude == doctest::Approx(v.latitude));
  // facing east, left is north
  out = vehicle_frame_to_global(v, 90.0, 0.0, 5.0);
  CHECK(out.latitude > v.latitude);
}

TEST_CASE("the inverse recovers the vehicle-frame offsets") {
  GeoPoint v{42.28, -83.74};
  GeoPoint target = vehicle_frame_to_global(v, 37.0, 55.0, -12.0);
  auto [d, l] = global_to_vehicle_frame(v, 37.0, target);
  CHECK(d == doctest::Approx(55.0).epsilon(1e-9));
  CHECK(l == doctest::Approx(-12.0).epsilon(1e-9));

  auto [zd, zl] = global_to_vehicle_frame(v, 37.0, v);
  CHECK(zd == doctest::Approx(0.0));
  CHECK(zl == doctest::Approx(0.0));
}

TEST_CASE("round trips stay under a micrometer over the working envelope") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> lat(-60.0, 60.0), lon(-180.0, 180.0),
      heading(0.0, 360.0), range(0.0, 200.0), lateral(-200.0, 200.0);
  for (int i = 0; i < 1000; ++i) {
    GeoPoint v{lat(rng), lon(rng)};
    double h = heading(rng), d = range(rng), l = lateral(rng);
    GeoPoint target = vehicle_frame_to_global(v, h, d, l);
    auto [d2, l2] = global_to_vehicle_frame(v, h, target);
    CHECK(std::abs(d2 - d) < 1e-6);
    CHECK(std::abs(l2 - l) < 1e-6);
  }
}

TEST_CASE("projected distance matches the great circle within half a percent") {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> lat(-60.0, 60.0), lon(-179.0, 179.0),
      heading(0.0, 360.0), range(0.0, 200.0), lateral(-200.0, 200.0);
  for (int i = 0; i < 1000; ++i) {
    GeoPoint v{lat(rng), lon(rng)};
    double d = range(rng), l = lateral(rng);
    double straight = std::hypot(d, l);
    if (straight < 1.0) continue;
    GeoPoint target = vehicle_frame_to_global(v, heading(rng), d, l);
    double geo = great_circle_m(v, target);
    CHECK(std::abs(geo - straight) / straight < 0.005);
  }
}

TEST_CASE("near-pole vehicles are refused") {
  CHECK_THROWS_AS(vehicle_frame_to_global({89.5, 0.0}, 0.0, 10.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(global_to_vehicle_frame({-89.0, 0.0}, 0.0, {-88.9, 0.0}), std::domain_error);
}

TEST_CASE("geojson: empty event list is an empty feature collection") {
  auto result = emit_geojson({}, {});
  auto doc = nlohmann::json::parse(result.document);
  CHECK(doc["type"] == "FeatureCollection");
  CHECK(doc["features"].is_array());
  CHECK(doc["features"].empty());
  CHECK(result.omitted == 0);
}

TEST_CASE("geojson features carry [lon, lat] coordinates and event properties") {
  std::vector<ScenarioEvent> events(3);
  std::vector<std::optional<GeoPoint>> positions(3);
  for (int i = 0; i < 3; ++i) {
    events[static_cast<std::size_t>(i)].scenario = Scenario::CutIn;
    events[static_cast<std::size_t>(i)].trip = {10, 2};
    events[static_cast<std::size_t>(i)].event_id = i;
    events[static_cast<std::size_t>(i)].start_tick = 100 * i;
    positions[static_cast<std::size_t>(i)] = GeoPoint{42.0 + i, -83.0 - i};
  }
  auto result = emit_geojson(events, positions);
  auto doc = nlohmann::json::parse(result.document);
  REQUIRE(doc["features"].size() == 3);
  for (int i = 0; i < 3; ++i) {
    const auto& feature = doc["features"][static_cast<std::size_t>(i)];
    CHECK(feature["geometry"]["type"] == "Point");
    CHECK(feature["geometry"]["coordinates"][0].get<double>() ==
          doctest::Approx(-83.0 - i));  // longitude first
    CHECK(feature["geometry"]["coordinates"][1].get<double>() == doctest::Approx(42.0 + i));
    CHECK(feature["properties"]["scenario"] == "cutin");
    CHECK(feature["properties"]["device"] == 10);
    CHECK(feature["properties"]["event_id"] == i);
    CHECK(feature["properties"]["start_tick"] == 100 * i);
  }
  // at least seven decimals in the raw text
  CHECK(result.document.find("42.000000000") != std::string::npos);
}

TEST_CASE("events without a position are omitted and counted") {
  std::vector<ScenarioEvent> events(2);
  events[0].event_id = 0;
  events[1].event_id = 1;
  std::vector<std::optional<GeoPoint>> positions(2);
  positions[1] = GeoPoint{42.0, -83.0};
  auto result = emit_geojson(events, positions);
  CHECK(result.omitted == 1);
  auto doc = nlohmann::json::parse(result.document);
  REQUIRE(doc["features"].size() == 1);
  CHECK(doc["features"][0]["properties"]["event_id"] == 1);
}
