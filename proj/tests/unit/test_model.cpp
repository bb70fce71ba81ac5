#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "test_support.hpp"
#include "trafficnet/types.hpp"
#include "trafficnet/validate.hpp"

using namespace trafficnet;

TEST_CASE("wsu sample out-of-range latitude is rejected with the violated rule") {
  WsuSample s = tsup::wsu(5);
  s.latitude = 91.0;
  auto err = validate_sample(s);
  REQUIRE(err.has_value());
  CHECK(*err == "latitude out of range");
}

TEST_CASE("front target with cipv set and valid range is accepted") {
  FrontTargetSample s = tsup::front(10, 4, 1);
  s.range_d = 12.3;
  CHECK_FALSE(validate_sample(s).has_value());
}

TEST_CASE("lane sample quality above the scale is rejected") {
  LaneSample s = tsup::lane(0, -1.7, 1.8);
  s.quality_left = 4;
  auto err = validate_sample(s);
  REQUIRE(err.has_value());
  CHECK(*err == "quality out of range");
}

TEST_CASE("lane ordering is only enforced at usable quality") {
  LaneSample crossed = tsup::lane(0, 1.0, -1.0, 2, 2);
  CHECK(validate_sample(crossed).has_value());

  // A side with degraded quality may report anything.
  crossed.quality_right = 1;
  CHECK_FALSE(validate_sample(crossed).has_value());
}

TEST_CASE("non-finite numeric fields are rejected") {
  WsuSample w = tsup::wsu(0);
  w.latitude = std::nan("");
  REQUIRE(validate_sample(w).has_value());
  CHECK(*validate_sample(w) == "non-finite value");

  FrontTargetSample f = tsup::front(0, 1, 0);
  f.range_rate = std::numeric_limits<double>::infinity();
  CHECK(validate_sample(f).has_value());

  LaneSample l = tsup::lane(0, -1.7, 1.8);
  l.lane_dis_r = -std::numeric_limits<double>::infinity();
  CHECK(validate_sample(l).has_value());
}

TEST_CASE("sample validation guards the remaining bounds") {
  CHECK(validate_sample(tsup::wsu(-1)).has_value());  // negative tick

  WsuSample heading = tsup::wsu(0);
  heading.heading = 360.0;
  CHECK(validate_sample(heading).has_value());

  FrontTargetSample cipv = tsup::front(0, 1, 2);
  CHECK(validate_sample(cipv).has_value());

  FrontTargetSample range = tsup::front(0, 1, 0);
  range.range_d = -0.5;
  CHECK(validate_sample(range).has_value());

  TripSummaryRow swapped = tsup::summary(10, 5);
  CHECK(validate_sample(swapped).has_value());
}

TEST_CASE("scenario names round-trip") {
  for (Scenario s : kAllScenarios) {
    auto back = scenario_from_name(scenario_name(s));
    REQUIRE(back.has_value());
    CHECK(*back == s);
  }
  CHECK_FALSE(scenario_from_name("gridlock").has_value());
}

TEST_CASE("default extraction config is valid and inverted bounds are not") {
  ExtractionConfig cfg;
  CHECK_FALSE(cfg.validate().has_value());

  cfg.lane_jump_min_m = 4.0;
  cfg.lane_jump_max_m = 2.0;
  CHECK(cfg.validate().has_value());
}

TEST_CASE("event ordering is by scenario, device, trip, id") {
  ScenarioEvent a, b;
  a.scenario = Scenario::FreeFlow;
  b.scenario = Scenario::CutIn;
  CHECK(event_order_less(a, b));

  b.scenario = Scenario::FreeFlow;
  a.trip = {1, 1};
  b.trip = {1, 2};
  CHECK(event_order_less(a, b));

  b.trip = a.trip;
  a.event_id = 0;
  b.event_id = 1;
  CHECK(event_order_less(a, b));
  CHECK_FALSE(event_order_less(b, a));
}
