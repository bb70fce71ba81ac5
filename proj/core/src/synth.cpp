#include "trafficnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

#include "trafficnet/csv.hpp"

namespace trafficnet {

// ---------------------------------------------------------------------------
// TripSpec
// ---------------------------------------------------------------------------

TripSpec TripSpec::from_kv(const KvFile& kv) {
  TripSpec s;
  s.trips = kv.get_i64("trips", s.trips);
  s.device = kv.get_i64("device", s.device);
  s.first_trip = kv.get_i64("first_trip", s.first_trip);
  s.ticks = kv.get_i64("ticks", s.ticks);
  s.seed = static_cast<std::uint64_t>(kv.get_i64("seed", static_cast<std::int64_t>(s.seed)));
  s.freeflow = static_cast<int>(kv.get_i64("freeflow", s.freeflow));
  s.carfollowing = static_cast<int>(kv.get_i64("carfollowing", s.carfollowing));
  s.cutin = static_cast<int>(kv.get_i64("cutin", s.cutin));
  s.lanechange = static_cast<int>(kv.get_i64("lanechange", s.lanechange));
  s.pedestrian = static_cast<int>(kv.get_i64("pedestrian", s.pedestrian));
  s.cyclist = static_cast<int>(kv.get_i64("cyclist", s.cyclist));
  s.lane_jitter_m = kv.get_f64("lane_jitter_m", s.lane_jitter_m);
  s.quality_dropout = kv.get_f64("quality_dropout", s.quality_dropout);
  if (auto err = s.validate()) throw std::invalid_argument("invalid trip spec: " + *err);
  return s;
}

TripSpec TripSpec::load(const std::filesystem::path& path) {
  return from_kv(KvFile::load(path));
}

KvFile TripSpec::to_kv() const {
  KvFile kv;
  kv.set_i64("trips", trips);
  kv.set_i64("device", device);
  kv.set_i64("first_trip", first_trip);
  kv.set_i64("ticks", ticks);
  kv.set_i64("seed", static_cast<std::int64_t>(seed));
  kv.set_i64("freeflow", freeflow);
  kv.set_i64("carfollowing", carfollowing);
  kv.set_i64("cutin", cutin);
  kv.set_i64("lanechange", lanechange);
  kv.set_i64("pedestrian", pedestrian);
  kv.set_i64("cyclist", cyclist);
  kv.set_f64("lane_jitter_m", lane_jitter_m);
  kv.set_f64("quality_dropout", quality_dropout);
  return kv;
}

std::optional<std::string> TripSpec::validate() const {
  if (trips < 1) return "trips must be >= 1";
  if (device < 0) return "device must be >= 0";
  if (first_trip < 0) return "first_trip must be >= 0";
  if (ticks < 200) return "ticks must be >= 200";
  if (freeflow < 0 || carfollowing < 0 || cutin < 0 || lanechange < 0 || pedestrian < 0 ||
      cyclist < 0) {
    return "scenario counts must be >= 0";
  }
  if (lane_jitter_m < 0 || lane_jitter_m > 0.05) return "lane_jitter_m must lie in [0, 0.05]";
  if (quality_dropout < 0 || quality_dropout > 0.05) {
    return "quality_dropout must lie in [0, 0.05]";
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Generator
// ---------------------------------------------------------------------------

namespace {

// The detection thresholds the corpus is planted for.
const ExtractionConfig kPlantConfig{};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Structural hash: the event layout depends on these fields only, never on
/// the seed, so reseeded specs share ground truth.
std::uint64_t placement_key(const TripSpec& spec) {
  std::uint64_t h = kFnvOffset;
  auto fold = [&](std::int64_t v) {
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(&v), sizeof v), h);
  };
  fold(spec.trips);
  fold(spec.device);
  fold(spec.first_trip);
  fold(spec.ticks);
  fold(spec.freeflow);
  fold(spec.carfollowing);
  fold(spec.cutin);
  fold(spec.lanechange);
  fold(spec.pedestrian);
  fold(spec.cyclist);
  return h;
}

enum class PlantKind { CarFollow, CutIn, LaneChange, Vru, VruNoise, Blocker };

struct Plant {
  PlantKind kind = PlantKind::Blocker;
  Tick footprint = 0;
  Tick start = 0;  // assigned by the allocator

  // CarFollow / CutIn / Blocker
  Tick prefix = 0;  // CutIn: observed-with-cipv-0 ticks before the cut

  // LaneChange
  ChangeDirection direction = ChangeDirection::Left;
  Tick near_cross_offset = 0;  // u: near-side wheels cross u ticks before center
  Tick far_update_offset = 0;  // v: far boundary updates v ticks after center
  Tick far_cross_offset = 0;   // s: far-side wheels leave the lane s ticks after

  // Vru / VruNoise
  int target_type = 0;
  int rows = 0;
  Tick step = 1;
  std::int64_t obstacle_id = 0;
};

struct LaneTrace {
  std::vector<double> dis_l, dis_r;
  std::vector<bool> overridden;  // lane-change slots: values and quality pinned
};

struct TripGen {
  TripKey key;
  Tick ticks;
  std::vector<Plant> plants;
  std::mt19937_64 place_rng;
  std::mt19937_64 noise_rng;
};

Tick rand_tick(std::mt19937_64& rng, Tick lo, Tick hi) {
  return std::uniform_int_distribution<Tick>(lo, hi)(rng);
}

int rand_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double rand_real(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

constexpr Tick kSlotPad = 25;    // min filler between plants
constexpr Tick kEdgeMargin = 10; // min filler at the trip edges
constexpr Tick kLcHalfSpan = 15; // lane-change slot half width around the center

std::vector<Plant> plan_plants(const TripSpec& spec, std::mt19937_64& rng,
                               std::int64_t& next_obstacle) {
  std::vector<Plant> plants;

  for (int i = 0; i < spec.carfollowing; ++i) {
    Plant p;
    p.kind = PlantKind::CarFollow;
    p.footprint = rand_tick(rng, 30, 80);
    p.obstacle_id = next_obstacle++;
    plants.push_back(p);
  }
  for (int i = 0; i < spec.cutin; ++i) {
    Plant p;
    p.kind = PlantKind::CutIn;
    p.prefix = rand_tick(rng, 5, 10);
    p.footprint = p.prefix + rand_tick(rng, 20, 50) + 1;
    p.obstacle_id = next_obstacle++;
    plants.push_back(p);
  }
  for (int i = 0; i < spec.lanechange; ++i) {
    Plant p;
    p.kind = PlantKind::LaneChange;
    p.footprint = 2 * kLcHalfSpan + 1;
    p.direction = rand_int(rng, 0, 1) == 0 ? ChangeDirection::Left : ChangeDirection::Right;
    p.near_cross_offset = rand_tick(rng, 2, 8);
    p.far_update_offset = rand_tick(rng, 0, 4);
    p.far_cross_offset = rand_tick(rng, p.far_update_offset + 1, 9);
    plants.push_back(p);
  }

  std::int64_t last_ped_obstacle = -1;
  for (int i = 0; i < spec.pedestrian; ++i) {
    Plant p;
    p.kind = PlantKind::Vru;
    p.target_type = kTargetTypePedestrian;
    p.rows = rand_int(rng, kPlantConfig.pedestrian_min_rows + 1, 20);
    p.step = rand_tick(rng, 1, 3);
    p.footprint = (p.rows - 1) * p.step + 1;
    // Occasionally reuse an id; the >track_gap return starts a new event.
    if (last_ped_obstacle >= 0 && rand_int(rng, 0, 3) == 0) {
      p.obstacle_id = last_ped_obstacle;
    } else {
      p.obstacle_id = next_obstacle++;
    }
    last_ped_obstacle = p.obstacle_id;
    plants.push_back(p);
  }
  std::int64_t last_cyc_obstacle = -1;
  for (int i = 0; i < spec.cyclist; ++i) {
    Plant p;
    p.kind = PlantKind::Vru;
    p.target_type = kTargetTypeCyclist;
    p.rows = rand_int(rng, kPlantConfig.cyclist_min_rows, 12);
    p.step = rand_tick(rng, 1, 3);
    p.footprint = (p.rows - 1) * p.step + 1;
    if (last_cyc_obstacle >= 0 && rand_int(rng, 0, 3) == 0) {
      p.obstacle_id = last_cyc_obstacle;
    } else {
      p.obstacle_id = next_obstacle++;
    }
    last_cyc_obstacle = p.obstacle_id;
    plants.push_back(p);
  }

  // Sub-threshold sightings; deleted by the extractors, so no ground-truth
  // event, but their rows still interrupt free flow.
  if (spec.pedestrian > 0) {
    Plant p;
    p.kind = PlantKind::VruNoise;
    p.target_type = kTargetTypePedestrian;
    p.rows = rand_int(rng, 1, kPlantConfig.pedestrian_min_rows - 1);
    p.step = 1;
    p.footprint = p.rows;
    p.obstacle_id = next_obstacle++;
    plants.push_back(p);
  }
  if (spec.cyclist > 0 && kPlantConfig.cyclist_min_rows > 1) {
    Plant p;
    p.kind = PlantKind::VruNoise;
    p.target_type = kTargetTypeCyclist;
    p.rows = kPlantConfig.cyclist_min_rows - 1;
    p.step = 1;
    p.footprint = p.rows;
    p.obstacle_id = next_obstacle++;
    plants.push_back(p);
  }

  // Blockers carve extra free-flow boundaries when the other plants leave
  // too few front-target regions.
  int front_regions = static_cast<int>(plants.size()) - spec.lanechange;
  int blockers = std::max(0, spec.freeflow - 1 - front_regions);
  for (int i = 0; i < blockers; ++i) {
    Plant p;
    p.kind = PlantKind::Blocker;
    p.footprint = rand_tick(rng, 20, 60);
    p.obstacle_id = next_obstacle++;
    plants.push_back(p);
  }

  std::shuffle(plants.begin(), plants.end(), rng);
  return plants;
}

void allocate_slots(std::vector<Plant>& plants, Tick ticks, std::mt19937_64& rng) {
  Tick footprint_total = 0;
  for (const Plant& p : plants) footprint_total += p.footprint;
  const Tick gaps = static_cast<Tick>(plants.size()) + 1;
  const Tick needed = footprint_total + kSlotPad * gaps + 2 * kEdgeMargin;
  if (needed > ticks) {
    throw std::invalid_argument("trip spec infeasible: " + std::to_string(footprint_total) +
                                " event ticks plus padding exceed trip length " +
                                std::to_string(ticks));
  }

  Tick leftover = ticks - needed;
  std::vector<double> weights(static_cast<std::size_t>(gaps));
  double total = 0;
  for (double& w : weights) {
    w = rand_real(rng, 0.0, 1.0) + 1e-9;
    total += w;
  }

  Tick pos = kEdgeMargin;
  for (std::size_t i = 0; i < plants.size(); ++i) {
    Tick extra = static_cast<Tick>(std::floor(leftover * weights[i] / total));
    pos += kSlotPad + extra;
    plants[i].start = pos;
    pos += plants[i].footprint;
  }
}

/// Lane boundary values over a lane-change slot, in slot-relative ticks
/// i = t - center, i in [-kLcHalfSpan, kLcHalfSpan]. Built for a left
/// change; a right change mirrors both series. All margins survive +-0.05 m
/// of jitter, so the window predicates are jitter-independent.
struct LcShape {
  Tick u, v, s;

  double left_base(Tick i) const {
    if (i <= -u - 1) {
      // approach: below the wheel line, -1.80 rising to -0.97
      double span = static_cast<double>(kLcHalfSpan - 1 - u);
      double frac = span <= 0 ? 1.0 : static_cast<double>(i + kLcHalfSpan) / span;
      return -1.80 + 0.83 * frac;
    }
    if (i <= -1) {
      // near-side wheels over the boundary: -0.85 rising to -0.10
      double span = static_cast<double>(u - 1);
      double frac = span <= 0 ? 1.0 : static_cast<double>(i + u) / span;
      return -0.85 + 0.75 * frac;
    }
    if (i == 0) return -3.45;  // boundary reassigned at the center crossing
    // settle toward the new lane center
    return -3.45 + 1.70 * static_cast<double>(i) / kLcHalfSpan;
  }

  double right_base(Tick i) const {
    if (i <= -1) return left_base(i) + 3.5;  // consistent width before the change
    if (i < v) return 3.40;                  // far boundary not yet updated
    if (i <= s) {
      // far-side wheels still on the old lane: 0.08 rising to 0.78
      double span = static_cast<double>(s - v);
      double frac = span <= 0 ? 1.0 : static_cast<double>(i - v) / span;
      return 0.08 + 0.70 * frac;
    }
    if (i <= 10) return 0.98 + 0.02 * static_cast<double>(i - s - 1);
    return 1.00 + 0.75 * static_cast<double>(i - 10) / 5.0;  // settle to ambient
  }
};

struct TripArtifacts {
  std::vector<FrontTargetSample> front;
  LaneTrace lane;
  std::vector<ScenarioEvent> lane_changes;            // cross/x-times filled
  std::vector<std::pair<TickRange, std::int64_t>> follow_runs;  // incl. post-cut
  std::vector<Tick> cut_ticks;
  std::vector<ScenarioEvent> vru_events;  // keepers only, ids assigned later
};

void rasterize_plant(const Plant& p, const TripGen& trip, TripArtifacts& art,
                     std::mt19937_64& noise) {
  const TripKey key = trip.key;
  auto front_row = [&](Tick t, std::int64_t obstacle, int type, int cipv, double d, double l,
                       double rate) {
    art.front.push_back({{key, t}, obstacle, type, cipv, d, l, rate});
  };

  switch (p.kind) {
    case PlantKind::CarFollow: {
      const Tick a = p.start, b = p.start + p.footprint - 1;
      double d = rand_real(noise, 18.0, 30.0);
      double lat = rand_real(noise, -0.5, 0.5);
      for (Tick t = a; t <= b; ++t) {
        double rate = rand_real(noise, -0.5, 0.2);
        front_row(t, p.obstacle_id, 1, 1, std::max(4.0, d), lat, rate);
        d += rate * 0.1;
      }
      art.follow_runs.push_back({{a, b}, p.obstacle_id});
      break;
    }
    case PlantKind::CutIn: {
      const Tick a = p.start, b = p.start + p.footprint - 1;
      const Tick cut = a + p.prefix;
      double side = rand_int(noise, 0, 1) == 0 ? 1.0 : -1.0;
      for (Tick t = a; t <= b; ++t) {
        bool before = t < cut;
        double frac = before ? 1.0
                             : std::max(0.0, 1.0 - static_cast<double>(t - cut) / 15.0);
        double lateral = side * 2.8 * frac + rand_real(noise, -0.1, 0.1);
        double d = rand_real(noise, 12.0, 25.0);
        front_row(t, p.obstacle_id, 1, before ? 0 : 1, d, lateral,
                  rand_real(noise, -1.0, 0.5));
      }
      art.cut_ticks.push_back(cut);
      art.follow_runs.push_back({{cut, b}, p.obstacle_id});
      break;
    }
    case PlantKind::Blocker: {
      const Tick a = p.start, b = p.start + p.footprint - 1;
      for (Tick t = a; t <= b; ++t) {
        front_row(t, p.obstacle_id, 1, 0, rand_real(noise, 40.0, 60.0),
                  rand_real(noise, -1.0, 1.0), rand_real(noise, -0.5, 0.5));
      }
      break;
    }
    case PlantKind::Vru:
    case PlantKind::VruNoise: {
      const bool pedestrian = p.target_type == kTargetTypePedestrian;
      double lat0 = pedestrian ? rand_real(noise, -3.0, -1.5) : rand_real(noise, 1.0, 2.0);
      double lat_step = pedestrian ? rand_real(noise, 0.2, 0.5) : rand_real(noise, -0.05, 0.05);
      double d = rand_real(noise, 8.0, 30.0);
      Tick first = p.start;
      Tick last = p.start;
      for (int i = 0; i < p.rows; ++i) {
        Tick t = p.start + static_cast<Tick>(i) * p.step;
        last = t;
        front_row(t, p.obstacle_id, p.target_type, 0, std::max(2.0, d),
                  lat0 + lat_step * i, rand_real(noise, -1.5, 0.0));
        d -= rand_real(noise, 0.0, 0.4);
      }
      if (p.kind == PlantKind::Vru) {
        ScenarioEvent ev;
        ev.scenario = pedestrian ? Scenario::Pedestrian : Scenario::Cyclist;
        ev.trip = key;
        ev.start_tick = first;
        ev.end_tick = last;
        ev.obstacle_id = p.obstacle_id;
        art.vru_events.push_back(ev);
      }
      break;
    }
    case PlantKind::LaneChange: {
      const Tick center = p.start + kLcHalfSpan;
      const LcShape shape{p.near_cross_offset, p.far_update_offset, p.far_cross_offset};
      const bool left = p.direction == ChangeDirection::Left;
      for (Tick i = -kLcHalfSpan; i <= kLcHalfSpan; ++i) {
        Tick t = center + i;
        double l = shape.left_base(i);
        double r = shape.right_base(i);
        auto idx = static_cast<std::size_t>(t);
        if (left) {
          art.lane.dis_l[idx] = l;
          art.lane.dis_r[idx] = r;
        } else {
          art.lane.dis_l[idx] = -r;  // mirrored series swap sides
          art.lane.dis_r[idx] = -l;
        }
        art.lane.overridden[idx] = true;
      }

      ScenarioEvent ev;
      ev.scenario = Scenario::LaneChange;
      ev.trip = key;
      // The detector records the LaneDisL jump tick as the cross time: the
      // center tick for a left change, the far-boundary update for a right.
      ev.cross_time = left ? center : center + p.far_update_offset;
      ev.change_direction = p.direction;
      art.lane_changes.push_back(ev);
      break;
    }
  }
}

/// Wheel-crossing windows evaluated directly on the final lane arrays;
/// fills x_time1/x_time2 and the event extent.
void resolve_lane_change_times(ScenarioEvent& ev, const LaneTrace& lane,
                               const std::vector<int>& qual_l, const std::vector<int>& qual_r) {
  const ExtractionConfig& cfg = kPlantConfig;
  const Tick cross = *ev.cross_time;
  const bool left = ev.change_direction == ChangeDirection::Left;
  const Tick window = cfg.lane_pair_window_ticks;

  auto near_over = [&](Tick t) {
    auto i = static_cast<std::size_t>(t);
    return left ? (qual_l[i] > cfg.quality_min && lane.dis_l[i] + cfg.half_width_m > 0)
                : (qual_r[i] > cfg.quality_min && lane.dis_r[i] - cfg.half_width_m < 0);
  };
  auto far_over = [&](Tick t) {
    auto i = static_cast<std::size_t>(t);
    return left ? (qual_r[i] > cfg.quality_min && lane.dis_r[i] - cfg.half_width_m < 0)
                : (qual_l[i] > cfg.quality_min && lane.dis_l[i] + cfg.half_width_m > 0);
  };

  std::optional<Tick> x1, x2;
  for (Tick t = cross - window; t <= cross; ++t) {
    if (t >= 0 && near_over(t)) {
      x1 = t;
      break;
    }
  }
  for (Tick t = cross; t <= cross + window; ++t) {
    if (t < static_cast<Tick>(lane.dis_l.size()) && far_over(t)) x2 = t;
  }
  if (!x1 || !x2) {
    throw std::logic_error("planted lane change failed to resolve wheel times");
  }
  ev.x_time1 = *x1;
  ev.x_time2 = *x2;
  ev.start_tick = *x1;
  ev.end_tick = *x2;
}

}  // namespace

SynthOutput generate(const TripSpec& spec) {
  if (auto err = spec.validate()) throw std::invalid_argument("invalid trip spec: " + *err);

  SynthOutput out;
  const std::uint64_t place_key = placement_key(spec);

  for (std::int64_t trip_idx = 0; trip_idx < spec.trips; ++trip_idx) {
    TripGen trip;
    trip.key = {spec.device, spec.first_trip + trip_idx};
    trip.ticks = spec.ticks;
    const auto salt = static_cast<std::uint64_t>(trip_idx + 1);
    trip.place_rng.seed(splitmix64(place_key ^ (0x517cc1b727220a95ULL * salt)));
    trip.noise_rng.seed(splitmix64(spec.seed ^ (0x2545f4914f6cdd1dULL * salt)));

    std::int64_t next_obstacle = 1;
    trip.plants = plan_plants(spec, trip.place_rng, next_obstacle);
    allocate_slots(trip.plants, trip.ticks, trip.place_rng);
    std::sort(trip.plants.begin(), trip.plants.end(),
              [](const Plant& a, const Plant& b) { return a.start < b.start; });

    const auto n = static_cast<std::size_t>(trip.ticks);
    TripArtifacts art;
    art.lane.dis_l.assign(n, 0.0);
    art.lane.dis_r.assign(n, 0.0);
    art.lane.overridden.assign(n, false);

    // Ambient lane geometry; slots overwrite their windows.
    for (std::size_t i = 0; i < n; ++i) {
      art.lane.dis_l[i] = -1.75;
      art.lane.dis_r[i] = 1.75;
    }
    for (const Plant& p : trip.plants) rasterize_plant(p, trip, art, trip.noise_rng);

    // Jitter everywhere; the planted shapes keep margin for it.
    auto& noise = trip.noise_rng;
    for (std::size_t i = 0; i < n; ++i) {
      art.lane.dis_l[i] += rand_real(noise, -spec.lane_jitter_m, spec.lane_jitter_m);
      art.lane.dis_r[i] += rand_real(noise, -spec.lane_jitter_m, spec.lane_jitter_m);
    }
    std::vector<int> qual_l(n), qual_r(n);
    for (std::size_t i = 0; i < n; ++i) {
      bool drop_l = !art.lane.overridden[i] &&
                    rand_real(noise, 0.0, 1.0) < spec.quality_dropout;
      bool drop_r = !art.lane.overridden[i] &&
                    rand_real(noise, 0.0, 1.0) < spec.quality_dropout;
      qual_l[i] = drop_l ? rand_int(noise, 0, 1) : rand_int(noise, 2, 3);
      qual_r[i] = drop_r ? rand_int(noise, 0, 1) : rand_int(noise, 2, 3);
    }

    // Vehicle track: smooth heading and speed, GPS integrated from them.
    double heading = rand_real(noise, 0.0, 360.0);
    double speed = rand_real(noise, 8.0, 28.0);
    double lat = 42.28 + 0.001 * static_cast<double>(trip_idx);
    double lon = -83.74;
    double distance = 0.0, distance_over_25 = 0.0;
    std::vector<WsuSample> wsu;
    wsu.reserve(n);
    for (Tick t = 0; t < trip.ticks; ++t) {
      wsu.push_back({{trip.key, t}, lat, lon, heading, speed});
      const double h = heading * 3.14159265358979323846 / 180.0;
      const double meters = speed * 0.1;
      lat += meters * std::cos(h) / 111320.0;
      lon += meters * std::sin(h) / (111320.0 * std::cos(lat * 3.14159265358979323846 / 180.0));
      distance += meters;
      if (speed > 11.176) distance_over_25 += meters;  // 25 mph
      heading += rand_real(noise, -0.2, 0.2);
      if (heading < 0) heading += 360.0;
      if (heading >= 360.0) heading -= 360.0;
      speed = std::clamp(speed + rand_real(noise, -0.2, 0.2), 5.0, 32.0);
    }

    // --- assemble raw tables ---
    out.tables.wsu.insert(out.tables.wsu.end(), wsu.begin(), wsu.end());
    out.tables.front_targets.insert(out.tables.front_targets.end(), art.front.begin(),
                                    art.front.end());
    for (Tick t = 0; t < trip.ticks; ++t) {
      auto i = static_cast<std::size_t>(t);
      out.tables.lanes.push_back(
          {{trip.key, t}, art.lane.dis_l[i], art.lane.dis_r[i], qual_l[i], qual_r[i]});
    }
    out.tables.summaries.push_back({trip.key, 0, trip.ticks - 1, distance,
                                    rand_int(noise, 0, 25), distance_over_25});

    // --- ground truth ---
    for (ScenarioEvent& ev : art.lane_changes) {
      resolve_lane_change_times(ev, art.lane, qual_l, qual_r);
    }
    std::sort(art.lane_changes.begin(), art.lane_changes.end(),
              [](const ScenarioEvent& a, const ScenarioEvent& b) {
                return *a.cross_time < *b.cross_time;
              });
    for (std::size_t i = 0; i < art.lane_changes.size(); ++i) {
      art.lane_changes[i].event_id = static_cast<std::int64_t>(i);
      out.truth.events.push_back(art.lane_changes[i]);
    }

    GroundTruth::TripLabels labels;

    // Free flow: complement of the front-target tick set over dense wsu.
    std::set<Tick> front_ticks;
    for (const auto& f : art.front) front_ticks.insert(f.key.tick);
    std::vector<Tick> qualifying;
    for (Tick t = 0; t < trip.ticks; ++t) {
      if (!front_ticks.count(t)) qualifying.push_back(t);
    }
    labels.freeflow_ticks = qualifying;
    std::int64_t ff_id = 0;
    std::size_t qi = 0;
    while (qi < qualifying.size()) {
      std::size_t qj = qi;
      while (qj + 1 < qualifying.size() &&
             qualifying[qj + 1] - qualifying[qj] <= kPlantConfig.freeflow_gap_ticks) {
        ++qj;
      }
      ScenarioEvent ev;
      ev.scenario = Scenario::FreeFlow;
      ev.trip = trip.key;
      ev.event_id = ff_id++;
      ev.start_tick = qualifying[qi];
      ev.end_tick = qualifying[qj];
      out.truth.events.push_back(ev);
      qi = qj + 1;
    }

    // Car following: planted runs plus the post-cut runs, in time order.
    std::sort(art.follow_runs.begin(), art.follow_runs.end(),
              [](const auto& a, const auto& b) { return a.first.start < b.first.start; });
    std::int64_t cf_id = 0;
    for (const auto& [range, obstacle] : art.follow_runs) {
      ScenarioEvent ev;
      ev.scenario = Scenario::CarFollowing;
      ev.trip = trip.key;
      ev.event_id = cf_id++;
      ev.start_tick = range.start;
      ev.end_tick = range.end;
      out.truth.events.push_back(ev);
      for (Tick t = range.start; t <= range.end; ++t) labels.carfollow.emplace_back(t, obstacle);
    }

    std::sort(art.cut_ticks.begin(), art.cut_ticks.end());
    std::int64_t cut_id = 0;
    for (Tick cut : art.cut_ticks) {
      ScenarioEvent ev;
      ev.scenario = Scenario::CutIn;
      ev.trip = trip.key;
      ev.event_id = cut_id++;
      ev.start_tick = std::max<Tick>(0, cut - kPlantConfig.cutin_window_ticks);
      ev.end_tick = std::min(trip.ticks - 1, cut + kPlantConfig.cutin_window_ticks);
      ev.cut_tick = cut;
      out.truth.events.push_back(ev);
    }

    std::sort(art.vru_events.begin(), art.vru_events.end(),
              [](const ScenarioEvent& a, const ScenarioEvent& b) {
                if (a.scenario != b.scenario) return a.scenario < b.scenario;
                return a.start_tick < b.start_tick;
              });
    std::int64_t ped_id = 0, cyc_id = 0;
    for (ScenarioEvent& ev : art.vru_events) {
      ev.event_id = ev.scenario == Scenario::Pedestrian ? ped_id++ : cyc_id++;
      out.truth.events.push_back(ev);
    }

    out.truth.labels.emplace(trip.key, std::move(labels));
  }

  std::sort(out.truth.events.begin(), out.truth.events.end(), event_order_less);
  return out;
}

// ---------------------------------------------------------------------------
// Ground-truth CSV
// ---------------------------------------------------------------------------

namespace {
constexpr std::string_view kGroundTruthHeader =
    "Scenario,Device,Trip,EventId,StartTime,EndTime,CrossTime,ChangeDirection,XTime1,XTime2,"
    "CutTime,ObstacleId";
}

void write_ground_truth(std::span<const ScenarioEvent> events,
                        const std::filesystem::path& file) {
  CsvWriter w(file);
  w.write_header(kGroundTruthHeader);
  for (const ScenarioEvent& ev : events) {
    w.field(scenario_name(ev.scenario));
    w.field_i64(ev.trip.device);
    w.field_i64(ev.trip.trip);
    w.field_i64(ev.event_id);
    w.field_i64(ev.start_tick);
    w.field_i64(ev.end_tick);
    if (ev.cross_time) w.field_i64(*ev.cross_time); else w.field_empty();
    if (ev.change_direction) w.field(change_direction_name(*ev.change_direction));
    else w.field_empty();
    if (ev.x_time1) w.field_i64(*ev.x_time1); else w.field_empty();
    if (ev.x_time2) w.field_i64(*ev.x_time2); else w.field_empty();
    if (ev.cut_tick) w.field_i64(*ev.cut_tick); else w.field_empty();
    if (ev.obstacle_id) w.field_i64(*ev.obstacle_id); else w.field_empty();
    w.end_row();
  }
  w.close();
}

std::vector<ScenarioEvent> read_ground_truth(const std::filesystem::path& file) {
  LineReader reader(file);
  if (!reader.good()) throw std::runtime_error("cannot open " + file.string());
  std::string line;
  if (!reader.next(line) || line != kGroundTruthHeader) {
    throw std::runtime_error("bad ground-truth header in " + file.string());
  }
  std::vector<ScenarioEvent> events;
  std::vector<std::string_view> f;
  while (reader.next(line)) {
    if (line.empty()) continue;
    split_csv(line, f);
    if (f.size() != 12) throw std::runtime_error("bad ground-truth row in " + file.string());
    ScenarioEvent ev;
    auto scen = scenario_from_name(f[0]);
    auto device = parse_i64(f[1]);
    auto trip = parse_i64(f[2]);
    auto id = parse_i64(f[3]);
    auto start = parse_i64(f[4]);
    auto end = parse_i64(f[5]);
    if (!scen || !device || !trip || !id || !start || !end) {
      throw std::runtime_error("bad ground-truth row in " + file.string());
    }
    ev.scenario = *scen;
    ev.trip = {*device, *trip};
    ev.event_id = *id;
    ev.start_tick = *start;
    ev.end_tick = *end;
    if (!f[6].empty()) ev.cross_time = parse_i64(f[6]);
    if (!f[7].empty()) ev.change_direction = change_direction_from_name(f[7]);
    if (!f[8].empty()) ev.x_time1 = parse_i64(f[8]);
    if (!f[9].empty()) ev.x_time2 = parse_i64(f[9]);
    if (!f[10].empty()) ev.cut_tick = parse_i64(f[10]);
    if (!f[11].empty()) ev.obstacle_id = parse_i64(f[11]);
    events.push_back(ev);
  }
  return events;
}

// ---------------------------------------------------------------------------
// Oracle: exhaustive per-tick re-derivation, no shared code with extract.
// ---------------------------------------------------------------------------

OracleLabels oracle_labels(const TripBundle& bundle, const ExtractionConfig& cfg) {
  OracleLabels out;
  out.key = bundle.key;

  Tick lo, hi;
  if (bundle.summary) {
    lo = bundle.summary->start_tick;
    hi = bundle.summary->end_tick;
  } else {
    lo = std::numeric_limits<Tick>::max();
    hi = std::numeric_limits<Tick>::min();
    for (const auto& r : bundle.wsu) { lo = std::min(lo, r.key.tick); hi = std::max(hi, r.key.tick); }
    for (const auto& r : bundle.front_targets) { lo = std::min(lo, r.key.tick); hi = std::max(hi, r.key.tick); }
    for (const auto& r : bundle.lanes) { lo = std::min(lo, r.key.tick); hi = std::max(hi, r.key.tick); }
    if (lo > hi) return out;
  }

  // --- free flow, tick by tick ---
  std::set<Tick> front_ticks;
  for (const auto& r : bundle.front_targets) front_ticks.insert(r.key.tick);
  for (const auto& w : bundle.wsu) {
    if (!front_ticks.count(w.key.tick)) out.freeflow_ticks.push_back(w.key.tick);
  }
  {
    std::int64_t id = 0;
    std::size_t i = 0;
    const auto& q = out.freeflow_ticks;
    while (i < q.size()) {
      std::size_t j = i;
      while (j + 1 < q.size() && q[j + 1] - q[j] <= cfg.freeflow_gap_ticks) ++j;
      ScenarioEvent ev;
      ev.scenario = Scenario::FreeFlow;
      ev.trip = bundle.key;
      ev.event_id = id++;
      ev.start_tick = q[i];
      ev.end_tick = q[j];
      out.events.push_back(ev);
      i = j + 1;
    }
  }

  // --- lane changes, exhaustive delta scan ---
  std::map<Tick, const LaneSample*> lane_at;
  for (const auto& s : bundle.lanes) lane_at[s.key.tick] = &s;

  struct Jump {
    Tick tick;
    double delta;
  };
  std::vector<Jump> left_jumps, right_jumps;
  {
    const LaneSample* prev = nullptr;
    for (const auto& s : bundle.lanes) {
      if (s.quality_left <= cfg.quality_min) continue;
      if (prev) {
        double d = s.lane_dis_l - prev->lane_dis_l;
        if (std::abs(d) > cfg.lane_jump_min_m && std::abs(d) < cfg.lane_jump_max_m) {
          left_jumps.push_back({s.key.tick, d});
        }
      }
      prev = &s;
    }
    prev = nullptr;
    for (const auto& s : bundle.lanes) {
      if (s.quality_right <= cfg.quality_min) continue;
      if (prev) {
        double d = s.lane_dis_r - prev->lane_dis_r;
        if (std::abs(d) > cfg.lane_jump_min_m && std::abs(d) < cfg.lane_jump_max_m) {
          right_jumps.push_back({s.key.tick, d});
        }
      }
      prev = &s;
    }
  }

  struct Candidate {
    Tick cross;
    ChangeDirection dir;
    Tick x1, x2;
  };
  std::vector<Candidate> candidates;
  for (const Jump& l : left_jumps) {
    const Jump* best = nullptr;
    for (const Jump& r : right_jumps) {
      if (std::abs(r.tick - l.tick) > cfg.lane_pair_window_ticks) continue;
      if ((l.delta < 0) != (r.delta < 0)) continue;
      if (!best || std::abs(r.tick - l.tick) < std::abs(best->tick - l.tick)) best = &r;
    }
    if (!best) continue;
    ChangeDirection dir = l.delta < 0 ? ChangeDirection::Left : ChangeDirection::Right;

    // Enumerate every tick of both windows.
    std::optional<Tick> x1, x2;
    for (Tick t = l.tick - cfg.lane_pair_window_ticks; t <= l.tick; ++t) {
      auto it = lane_at.find(t);
      if (it == lane_at.end()) continue;
      const LaneSample& s = *it->second;
      bool over = dir == ChangeDirection::Left
                      ? (s.quality_left > cfg.quality_min && s.lane_dis_l + cfg.half_width_m > 0)
                      : (s.quality_right > cfg.quality_min && s.lane_dis_r - cfg.half_width_m < 0);
      if (over && !x1) x1 = t;
    }
    for (Tick t = l.tick; t <= l.tick + cfg.lane_pair_window_ticks; ++t) {
      auto it = lane_at.find(t);
      if (it == lane_at.end()) continue;
      const LaneSample& s = *it->second;
      bool over = dir == ChangeDirection::Left
                      ? (s.quality_right > cfg.quality_min && s.lane_dis_r - cfg.half_width_m < 0)
                      : (s.quality_left > cfg.quality_min && s.lane_dis_l + cfg.half_width_m > 0);
      if (over) x2 = t;
    }
    if (!x1 || !x2) continue;
    candidates.push_back({l.tick, dir, *x1, *x2});
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) { return a.cross < b.cross; });
  std::vector<Candidate> kept;
  for (const Candidate& c : candidates) {
    if (!kept.empty() && c.cross - kept.back().cross < cfg.lane_dedup_ticks) continue;
    kept.push_back(c);
  }
  {
    std::int64_t id = 0;
    for (const Candidate& c : kept) {
      ScenarioEvent ev;
      ev.scenario = Scenario::LaneChange;
      ev.trip = bundle.key;
      ev.event_id = id++;
      ev.start_tick = c.x1;
      ev.end_tick = c.x2;
      ev.cross_time = c.cross;
      ev.change_direction = c.dir;
      ev.x_time1 = c.x1;
      ev.x_time2 = c.x2;
      out.events.push_back(ev);
    }
  }

  // --- per-tick lane-change membership over the trip extent ---
  auto in_lane_change = [&](Tick t) {
    for (const Candidate& c : kept) {
      if (t >= c.x1 && t <= c.x2) return true;
    }
    return false;
  };

  // --- car following: per-tick CIPV labels ---
  std::multimap<Tick, const FrontTargetSample*> front_at;
  for (const auto& r : bundle.front_targets) front_at.emplace(r.key.tick, &r);

  std::map<Tick, std::int64_t> cipv_label;
  for (Tick t = lo; t <= hi; ++t) {
    std::optional<std::int64_t> obstacle;
    auto [begin, end] = front_at.equal_range(t);
    for (auto it = begin; it != end; ++it) {
      if (it->second->cipv == 1 && (!obstacle || it->second->obstacle_id < *obstacle)) {
        obstacle = it->second->obstacle_id;
      }
    }
    if (obstacle && !in_lane_change(t)) cipv_label[t] = *obstacle;
  }
  for (const auto& [t, obstacle] : cipv_label) out.carfollow.emplace_back(t, obstacle);
  {
    std::int64_t id = 0;
    auto it = cipv_label.begin();
    while (it != cipv_label.end()) {
      Tick start = it->first;
      std::int64_t obstacle = it->second;
      Tick end = start;
      auto next = std::next(it);
      while (next != cipv_label.end() && next->first == end + 1 && next->second == obstacle) {
        end = next->first;
        ++next;
      }
      ScenarioEvent ev;
      ev.scenario = Scenario::CarFollowing;
      ev.trip = bundle.key;
      ev.event_id = id++;
      ev.start_tick = start;
      ev.end_tick = end;
      out.events.push_back(ev);
      it = next;
    }
  }

  // --- cut-ins: consecutive-observation scan per obstacle ---
  std::map<std::int64_t, std::vector<const FrontTargetSample*>> by_obstacle;
  for (const auto& r : bundle.front_targets) by_obstacle[r.obstacle_id].push_back(&r);

  std::vector<Tick> cuts;
  for (const auto& r : bundle.front_targets) {
    if (r.cipv != 1) continue;
    Tick t = r.key.tick;
    if (t < lo || t > hi || in_lane_change(t)) continue;
    const FrontTargetSample* prev = nullptr;
    for (const FrontTargetSample* cand : by_obstacle[r.obstacle_id]) {
      if (cand->key.tick < t && (!prev || cand->key.tick > prev->key.tick)) prev = cand;
    }
    bool prior = prev != nullptr && t - prev->key.tick <= cfg.track_gap_ticks;
    bool cut = prior ? prev->cipv == 0 : !cfg.cutin_same_track_only;
    if (cut) cuts.push_back(t);
  }
  std::sort(cuts.begin(), cuts.end());
  out.cut_ticks = cuts;
  {
    std::int64_t id = 0;
    for (Tick cut : cuts) {
      ScenarioEvent ev;
      ev.scenario = Scenario::CutIn;
      ev.trip = bundle.key;
      ev.event_id = id++;
      ev.start_tick = std::max(lo, cut - cfg.cutin_window_ticks);
      ev.end_tick = std::min(hi, cut + cfg.cutin_window_ticks);
      ev.cut_tick = cut;
      out.events.push_back(ev);
    }
  }

  // --- VRUs ---
  for (int type : {kTargetTypePedestrian, kTargetTypeCyclist}) {
    int min_rows = type == kTargetTypePedestrian ? cfg.pedestrian_min_rows : cfg.cyclist_min_rows;
    std::vector<const FrontTargetSample*> rows;
    for (const auto& r : bundle.front_targets) {
      if (r.target_type == type) rows.push_back(&r);
    }
    std::vector<std::vector<const FrontTargetSample*>> groups;
    for (const auto* r : rows) {
      bool fresh = groups.empty() || groups.back().back()->obstacle_id != r->obstacle_id ||
                   r->key.tick - groups.back().back()->key.tick > cfg.track_gap_ticks;
      if (fresh) groups.emplace_back();
      groups.back().push_back(r);
    }
    std::int64_t id = 0;
    for (const auto& g : groups) {
      if (g.size() < static_cast<std::size_t>(min_rows)) continue;
      ScenarioEvent ev;
      ev.scenario = type == kTargetTypePedestrian ? Scenario::Pedestrian : Scenario::Cyclist;
      ev.trip = bundle.key;
      ev.event_id = id++;
      ev.start_tick = g.front()->key.tick;
      ev.end_tick = g.back()->key.tick;
      ev.obstacle_id = g.front()->obstacle_id;
      out.events.push_back(ev);
    }
  }

  std::sort(out.events.begin(), out.events.end(), event_order_less);
  return out;
}

// ---------------------------------------------------------------------------
// Compare
// ---------------------------------------------------------------------------

namespace {

using EventKey = std::tuple<int, std::int64_t, std::int64_t, std::int64_t>;

EventKey key_of(const ScenarioEvent& ev) {
  return {static_cast<int>(ev.scenario), ev.trip.device, ev.trip.trip, ev.event_id};
}

std::string diff_fields(const ScenarioEvent& a, const ScenarioEvent& b) {
  std::string out;
  auto add = [&](std::string_view name) {
    if (!out.empty()) out += ' ';
    out += name;
  };
  if (a.start_tick != b.start_tick) add("start_tick");
  if (a.end_tick != b.end_tick) add("end_tick");
  if (a.cross_time != b.cross_time) add("cross_time");
  if (a.change_direction != b.change_direction) add("change_direction");
  if (a.x_time1 != b.x_time1) add("x_time1");
  if (a.x_time2 != b.x_time2) add("x_time2");
  if (a.cut_tick != b.cut_tick) add("cut_tick");
  if (a.obstacle_id != b.obstacle_id) add("obstacle_id");
  return out;
}

std::string event_key_text(const ScenarioEvent& ev) {
  std::string s(scenario_name(ev.scenario));
  s += " device=" + std::to_string(ev.trip.device) + " trip=" + std::to_string(ev.trip.trip) +
       " event=" + std::to_string(ev.event_id);
  return s;
}

}  // namespace

CompareReport compare_events(std::span<const ScenarioEvent> actual,
                             std::span<const ScenarioEvent> expected) {
  CompareReport report;
  std::map<EventKey, const ScenarioEvent*> actual_by_key;
  for (const auto& ev : actual) actual_by_key.emplace(key_of(ev), &ev);
  std::set<EventKey> expected_keys;
  for (const auto& ev : expected) expected_keys.insert(key_of(ev));

  for (const auto& exp : expected) {
    auto it = actual_by_key.find(key_of(exp));
    if (it == actual_by_key.end()) {
      report.missed.push_back(exp);
      continue;
    }
    std::string fields = diff_fields(exp, *it->second);
    if (fields.empty()) {
      ++report.matched;
    } else {
      report.mismatches.push_back({exp, *it->second, std::move(fields)});
    }
  }
  for (const auto& ev : actual) {
    if (!expected_keys.count(key_of(ev))) report.spurious.push_back(ev);
  }
  return report;
}

std::string CompareReport::summary() const {
  std::string out = "matched " + std::to_string(matched) + ", missed " +
                    std::to_string(missed.size()) + ", spurious " +
                    std::to_string(spurious.size()) + ", field mismatches " +
                    std::to_string(mismatches.size()) + "\n";
  std::size_t shown = 0;
  for (const auto& ev : missed) {
    if (shown++ >= 20) break;
    out += "  missed: " + event_key_text(ev) + "\n";
  }
  for (const auto& ev : spurious) {
    if (shown++ >= 40) break;
    out += "  spurious: " + event_key_text(ev) + "\n";
  }
  for (const auto& m : mismatches) {
    if (shown++ >= 60) break;
    out += "  mismatch: " + event_key_text(m.expected) + " fields: " + m.fields + "\n";
  }
  return out;
}

void CompareReport::write_csv(const std::filesystem::path& file) const {
  CsvWriter w(file);
  w.write_header("Status,Scenario,Device,Trip,EventId,Field,Expected,Actual");
  auto event_fields = [&](const ScenarioEvent& ev) {
    w.field(scenario_name(ev.scenario));
    w.field_i64(ev.trip.device);
    w.field_i64(ev.trip.trip);
    w.field_i64(ev.event_id);
  };
  for (const auto& ev : missed) {
    w.field("missed");
    event_fields(ev);
    w.field_empty();
    w.field_empty();
    w.field_empty();
    w.end_row();
  }
  for (const auto& ev : spurious) {
    w.field("spurious");
    event_fields(ev);
    w.field_empty();
    w.field_empty();
    w.field_empty();
    w.end_row();
  }
  auto opt_text = [](const std::optional<Tick>& v) {
    return v ? std::to_string(*v) : std::string();
  };
  for (const auto& m : mismatches) {
    // one row per differing field
    auto emit = [&](std::string_view field, const std::string& exp, const std::string& act) {
      if (m.fields.find(field) == std::string::npos) return;
      w.field("mismatch");
      event_fields(m.expected);
      w.field(field);
      w.field(exp);
      w.field(act);
      w.end_row();
    };
    emit("start_tick", std::to_string(m.expected.start_tick), std::to_string(m.actual.start_tick));
    emit("end_tick", std::to_string(m.expected.end_tick), std::to_string(m.actual.end_tick));
    emit("cross_time", opt_text(m.expected.cross_time), opt_text(m.actual.cross_time));
    emit("change_direction",
         m.expected.change_direction
             ? std::string(change_direction_name(*m.expected.change_direction))
             : std::string(),
         m.actual.change_direction
             ? std::string(change_direction_name(*m.actual.change_direction))
             : std::string());
    emit("x_time1", opt_text(m.expected.x_time1), opt_text(m.actual.x_time1));
    emit("x_time2", opt_text(m.expected.x_time2), opt_text(m.actual.x_time2));
    emit("cut_tick", opt_text(m.expected.cut_tick), opt_text(m.actual.cut_tick));
    emit("obstacle_id",
         m.expected.obstacle_id ? std::to_string(*m.expected.obstacle_id) : std::string(),
         m.actual.obstacle_id ? std::to_string(*m.actual.obstacle_id) : std::string());
  }
  w.close();
}

}  // namespace trafficnet
