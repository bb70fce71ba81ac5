#include "trafficnet/extract.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <unordered_map>

namespace trafficnet {

namespace {

std::optional<GpsFix> gps_at(const TripBundle& bundle, Tick tick) {
  auto it = std::lower_bound(bundle.wsu.begin(), bundle.wsu.end(), tick,
                             [](const WsuSample& s, Tick t) { return s.key.tick < t; });
  if (it == bundle.wsu.end() || it->key.tick != tick) return std::nullopt;
  return GpsFix{it->latitude, it->longitude, it->heading, it->speed};
}

template <class Row>
std::span<const Row> tick_window(const std::vector<Row>& rows, Tick first, Tick last) {
  auto lo = std::lower_bound(rows.begin(), rows.end(), first,
                             [](const Row& r, Tick t) { return r.key.tick < t; });
  auto hi = std::upper_bound(lo, rows.end(), last,
                             [](Tick t, const Row& r) { return t < r.key.tick; });
  return {&*lo, static_cast<std::size_t>(hi - lo)};
}

}  // namespace

Tick CutInSeqRow::tick() const {
  return std::visit([](const auto& r) { return r.key.tick; }, payload);
}

// ---------------------------------------------------------------------------
// Free flow
// ---------------------------------------------------------------------------

FreeFlowOutput extract_free_flow(const TripBundle& bundle, const ExtractionConfig& cfg) {
  FreeFlowOutput out;

  // Anti-join against the front-target ticks; both sides are time-sorted.
  std::vector<const WsuSample*> qualifying;
  std::vector<Tick> ticks;
  auto front = bundle.front_targets.begin();
  for (const WsuSample& w : bundle.wsu) {
    while (front != bundle.front_targets.end() && front->key.tick < w.key.tick) ++front;
    bool blocked = front != bundle.front_targets.end() && front->key.tick == w.key.tick;
    if (!blocked) {
      qualifying.push_back(&w);
      ticks.push_back(w.key.tick);
    }
  }

  std::vector<TickRange> runs = segment_runs(ticks, cfg.freeflow_gap_ticks);
  out.events.reserve(runs.size());
  std::int64_t event_id = 0;
  for (const TickRange& run : runs) {
    ScenarioEvent ev;
    ev.scenario = Scenario::FreeFlow;
    ev.trip = bundle.key;
    ev.event_id = event_id++;
    ev.start_tick = run.start;
    ev.end_tick = run.end;
    out.events.push_back(ev);
  }

  out.rows.reserve(qualifying.size());
  std::size_t run_idx = 0;
  for (const WsuSample* w : qualifying) {
    while (run_idx < runs.size() && w->key.tick > runs[run_idx].end) ++run_idx;
    out.rows.push_back({static_cast<std::int64_t>(run_idx), *w});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lane change
// ---------------------------------------------------------------------------

namespace {

struct BoundaryJump {
  Tick tick = 0;
  double delta = 0.0;
};

// Jumps between consecutive usable-quality samples of one boundary series.
template <class Value, class Quality>
std::vector<BoundaryJump> boundary_jumps(std::span<const LaneSample> lanes, Value value,
                                         Quality quality, const ExtractionConfig& cfg) {
  std::vector<BoundaryJump> jumps;
  const LaneSample* prev = nullptr;
  for (const LaneSample& s : lanes) {
    if (quality(s) <= cfg.quality_min) continue;
    if (prev != nullptr) {
      double delta = value(s) - value(*prev);
      double mag = std::abs(delta);
      if (mag > cfg.lane_jump_min_m && mag < cfg.lane_jump_max_m) {
        jumps.push_back({s.key.tick, delta});
      }
    }
    prev = &s;
  }
  return jumps;
}

}  // namespace

std::vector<LaneChangeCandidate> detect_two_wheel_change(std::span<const LaneSample> lanes,
                                                         const ExtractionConfig& cfg) {
  auto left = boundary_jumps(
      lanes, [](const LaneSample& s) { return s.lane_dis_l; },
      [](const LaneSample& s) { return s.quality_left; }, cfg);
  auto right = boundary_jumps(
      lanes, [](const LaneSample& s) { return s.lane_dis_r; },
      [](const LaneSample& s) { return s.quality_right; }, cfg);

  std::vector<LaneChangeCandidate> candidates;
  for (const BoundaryJump& l : left) {
    const BoundaryJump* best = nullptr;
    for (const BoundaryJump& r : right) {
      if (r.tick < l.tick - cfg.lane_pair_window_ticks) continue;
      if (r.tick > l.tick + cfg.lane_pair_window_ticks) break;
      if ((l.delta < 0) != (r.delta < 0)) continue;  // mixed-sign pairs rejected
      if (best == nullptr ||
          std::abs(r.tick - l.tick) < std::abs(best->tick - l.tick)) {
        best = &r;
      }
    }
    if (best != nullptr) {
      candidates.push_back({l.tick, best->tick,
                            l.delta < 0 ? ChangeDirection::Left : ChangeDirection::Right,
                            l.delta, best->delta});
    }
  }
  return candidates;
}

std::optional<std::pair<Tick, Tick>> compute_wheel_exist_time(std::span<const LaneSample> lanes,
                                                              Tick cross_time,
                                                              ChangeDirection direction,
                                                              const ExtractionConfig& cfg) {
  const Tick window = cfg.lane_pair_window_ticks;
  const double half = cfg.half_width_m;

  auto left_over = [&](const LaneSample& s) {
    return s.quality_left > cfg.quality_min && s.lane_dis_l + half > 0;
  };
  auto right_over = [&](const LaneSample& s) {
    return s.quality_right > cfg.quality_min && s.lane_dis_r - half < 0;
  };

  std::optional<Tick> x1, x2;
  for (const LaneSample& s : lanes) {
    Tick t = s.key.tick;
    if (t < cross_time - window) continue;
    if (t > cross_time + window) break;
    bool before = t <= cross_time;
    bool after = t >= cross_time;
    if (direction == ChangeDirection::Left) {
      if (before && !x1 && left_over(s)) x1 = t;   // first near-side wheel crossing
      if (after && right_over(s)) x2 = t;          // last far-side wheel on the lane
    } else {
      if (before && !x1 && right_over(s)) x1 = t;
      if (after && left_over(s)) x2 = t;
    }
  }
  if (!x1 || !x2) return std::nullopt;
  return std::pair(*x1, *x2);
}

LaneChangeOutput extract_lane_change(const TripBundle& bundle, const ExtractionConfig& cfg) {
  LaneChangeOutput out;
  auto candidates = detect_two_wheel_change(bundle.lanes, cfg);
  out.candidates = candidates.size();

  struct Resolved {
    LaneChangeCandidate cand;
    Tick x1, x2;
  };
  std::vector<Resolved> resolved;
  for (const LaneChangeCandidate& cand : candidates) {
    auto xt = compute_wheel_exist_time(bundle.lanes, cand.left_jump_tick, cand.direction, cfg);
    if (!xt) {
      ++out.unresolved;
      continue;
    }
    resolved.push_back({cand, xt->first, xt->second});
  }

  // Redundant events within lane_dedup_ticks collapse to the earliest.
  std::int64_t event_id = 0;
  std::optional<Tick> last_kept;
  for (const Resolved& r : resolved) {
    Tick cross = r.cand.left_jump_tick;
    if (last_kept && cross - *last_kept < cfg.lane_dedup_ticks) {
      ++out.deduped;
      continue;
    }
    last_kept = cross;

    ScenarioEvent ev;
    ev.scenario = Scenario::LaneChange;
    ev.trip = bundle.key;
    ev.event_id = event_id++;
    ev.start_tick = r.x1;
    ev.end_tick = r.x2;
    ev.cross_time = cross;
    ev.change_direction = r.cand.direction;
    ev.x_time1 = r.x1;
    ev.x_time2 = r.x2;
    out.events.push_back(ev);

    for (const LaneSample& s : tick_window(bundle.lanes, r.x1, r.x2)) {
      out.rows.push_back({ev.event_id, s, gps_at(bundle, s.key.tick)});
    }
  }
  return out;
}

std::vector<NoChangeSegment> build_no_change_segments(
    const TripBundle& bundle, std::span<const ScenarioEvent> lane_changes) {
  std::vector<NoChangeSegment> out;
  TickRange bounds = bundle.bounds();
  if (bounds.start > bounds.end) return out;

  std::vector<TickRange> holes;
  holes.reserve(lane_changes.size());
  for (const ScenarioEvent& ev : lane_changes) {
    holes.push_back({ev.x_time1.value_or(ev.start_tick), ev.x_time2.value_or(ev.end_tick)});
  }
  for (const TickRange& r : complement_within(bounds, holes)) {
    out.push_back({bundle.key, r});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Car following
// ---------------------------------------------------------------------------

CipvTimeline build_cipv_timeline(const TripBundle& bundle) {
  CipvTimeline timeline;
  timeline.key = bundle.key;

  const auto& rows = bundle.front_targets;
  std::size_t i = 0;
  while (i < rows.size()) {
    Tick tick = rows[i].key.tick;
    std::optional<std::int64_t> obstacle;
    int claims = 0;
    for (; i < rows.size() && rows[i].key.tick == tick; ++i) {
      if (rows[i].cipv == 1) {
        ++claims;
        if (!obstacle || rows[i].obstacle_id < *obstacle) obstacle = rows[i].obstacle_id;
      }
    }
    if (obstacle) {
      timeline.entries.emplace_back(tick, *obstacle);
      if (claims > 1) ++timeline.conflicting_ticks;
    }
  }
  return timeline;
}

CarFollowOutput extract_car_following(const TripBundle& bundle,
                                      std::span<const NoChangeSegment> segments,
                                      const ExtractionConfig& cfg) {
  (void)cfg;
  CarFollowOutput out;
  CipvTimeline timeline = build_cipv_timeline(bundle);
  out.cipv_conflicting_ticks = timeline.conflicting_ticks;

  struct Run {
    Tick start, end;
    std::int64_t obstacle;
  };
  std::vector<Run> runs;
  std::optional<Run> open;
  std::size_t seg = 0;

  auto close = [&] {
    if (open) runs.push_back(*open);
    open.reset();
  };

  for (const auto& [tick, obstacle] : timeline.entries) {
    while (seg < segments.size() && segments[seg].range.end < tick) ++seg;
    bool inside = seg < segments.size() && segments[seg].range.contains(tick);
    if (!inside) {
      close();
      continue;
    }
    if (open && open->end + 1 == tick && open->obstacle == obstacle) {
      open->end = tick;
    } else {
      close();
      open = Run{tick, tick, obstacle};
    }
  }
  close();

  std::int64_t event_id = 0;
  for (const Run& run : runs) {
    ScenarioEvent ev;
    ev.scenario = Scenario::CarFollowing;
    ev.trip = bundle.key;
    ev.event_id = event_id++;
    ev.start_tick = run.start;
    ev.end_tick = run.end;
    out.events.push_back(ev);

    for (const FrontTargetSample& s : tick_window(bundle.front_targets, run.start, run.end)) {
      if (s.obstacle_id != run.obstacle || s.cipv != 1) continue;
      out.rows.push_back({ev.event_id, s, gps_at(bundle, s.key.tick)});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cut-in
// ---------------------------------------------------------------------------

CutInOutput extract_cut_in(const TripBundle& bundle, std::span<const NoChangeSegment> segments,
                           const ExtractionConfig& cfg) {
  CutInOutput out;
  TickRange bounds = bundle.bounds();

  auto inside_segment = [&](Tick t) {
    for (const NoChangeSegment& s : segments) {
      if (s.range.contains(t)) return true;
      if (s.range.start > t) break;
    }
    return false;
  };

  struct LastSeen {
    Tick tick;
    int cipv;
  };
  std::unordered_map<std::int64_t, LastSeen> last_seen;

  std::vector<Tick> cut_ticks;
  for (const FrontTargetSample& row : bundle.front_targets) {
    const Tick t = row.key.tick;
    auto it = last_seen.find(row.obstacle_id);
    const LastSeen* prior =
        (it != last_seen.end() && t - it->second.tick <= cfg.track_gap_ticks) ? &it->second
                                                                              : nullptr;
    bool is_cut = false;
    if (row.cipv == 1 && inside_segment(t)) {
      if (prior != nullptr) {
        is_cut = prior->cipv == 0;
      } else {
        // Track first observed (or re-acquired after a gap) already in path.
        is_cut = !cfg.cutin_same_track_only;
      }
    }
    if (is_cut) cut_ticks.push_back(t);
    last_seen[row.obstacle_id] = {t, row.cipv};
  }

  std::int64_t event_id = 0;
  for (Tick cut : cut_ticks) {
    ScenarioEvent ev;
    ev.scenario = Scenario::CutIn;
    ev.trip = bundle.key;
    ev.event_id = event_id++;
    ev.start_tick = std::max(bounds.start, cut - cfg.cutin_window_ticks);
    ev.end_tick = std::min(bounds.end, cut + cfg.cutin_window_ticks);
    ev.cut_tick = cut;
    out.events.push_back(ev);

    // The sequence draws on all raw tables inside the window, interleaved
    // by tick with wsu rows first.
    auto wsu = tick_window(bundle.wsu, ev.start_tick, ev.end_tick);
    auto front = tick_window(bundle.front_targets, ev.start_tick, ev.end_tick);
    auto lane = tick_window(bundle.lanes, ev.start_tick, ev.end_tick);
    std::size_t wi = 0, fi = 0, li = 0;
    for (Tick t = ev.start_tick; t <= ev.end_tick; ++t) {
      std::optional<GpsFix> gps;
      if (wi < wsu.size() && wsu[wi].key.tick == t) {
        gps = GpsFix{wsu[wi].latitude, wsu[wi].longitude, wsu[wi].heading, wsu[wi].speed};
        out.rows.push_back({ev.event_id, wsu[wi], gps});
        ++wi;
      }
      for (; fi < front.size() && front[fi].key.tick == t; ++fi) {
        out.rows.push_back({ev.event_id, front[fi], gps});
      }
      if (li < lane.size() && lane[li].key.tick == t) {
        out.rows.push_back({ev.event_id, lane[li], gps});
        ++li;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Vulnerable road users
// ---------------------------------------------------------------------------

VruOutput extract_vru(const TripBundle& bundle, int target_type, int min_rows,
                      const ExtractionConfig& cfg) {
  VruOutput out;

  std::vector<const FrontTargetSample*> matching;
  for (const FrontTargetSample& s : bundle.front_targets) {
    if (s.target_type == target_type) matching.push_back(&s);
  }

  // Group encounters: the id changes, or the same id returns after a gap.
  std::vector<std::pair<std::size_t, std::size_t>> groups;  // [first, last] indices
  for (std::size_t i = 0; i < matching.size(); ++i) {
    bool fresh = i == 0 || matching[i]->obstacle_id != matching[i - 1]->obstacle_id ||
                 matching[i]->key.tick - matching[i - 1]->key.tick > cfg.track_gap_ticks;
    if (fresh) {
      groups.emplace_back(i, i);
    } else {
      groups.back().second = i;
    }
  }

  Scenario scenario =
      target_type == kTargetTypeCyclist ? Scenario::Cyclist : Scenario::Pedestrian;
  std::int64_t event_id = 0;
  for (const auto& [first, last] : groups) {
    std::size_t size = last - first + 1;
    if (size < static_cast<std::size_t>(min_rows)) {
      ++out.deleted_events;
      continue;
    }
    ScenarioEvent ev;
    ev.scenario = scenario;
    ev.trip = bundle.key;
    ev.event_id = event_id++;
    ev.start_tick = matching[first]->key.tick;
    ev.end_tick = matching[last]->key.tick;
    ev.obstacle_id = matching[first]->obstacle_id;
    out.events.push_back(ev);

    for (std::size_t i = first; i <= last; ++i) {
      auto gps = gps_at(bundle, matching[i]->key.tick);
      if (!gps) ++out.rows_without_gps;
      out.rows.push_back({ev.event_id, *matching[i], gps});
    }
  }
  return out;
}

VruOutput extract_pedestrian(const TripBundle& bundle, const ExtractionConfig& cfg) {
  return extract_vru(bundle, kTargetTypePedestrian, cfg.pedestrian_min_rows, cfg);
}

VruOutput extract_cyclist(const TripBundle& bundle, const ExtractionConfig& cfg) {
  return extract_vru(bundle, kTargetTypeCyclist, cfg.cyclist_min_rows, cfg);
}

// ---------------------------------------------------------------------------
// Whole-trip driver
// ---------------------------------------------------------------------------

ScenarioMask ScenarioMask::all() {
  ScenarioMask m;
  m.enabled_.fill(true);
  return m;
}

ScenarioMask ScenarioMask::only(Scenario s) {
  ScenarioMask m;
  m.set(s, true);
  return m;
}

bool ScenarioMask::is_all() const {
  return std::all_of(enabled_.begin(), enabled_.end(), [](bool b) { return b; });
}

TripExtraction extract_trip(const TripBundle& bundle, const ExtractionConfig& cfg,
                            const ScenarioMask& mask) {
  TripExtraction out;
  out.key = bundle.key;

  bool needs_lane = mask.contains(Scenario::LaneChange) ||
                    mask.contains(Scenario::CarFollowing) || mask.contains(Scenario::CutIn);

  if (mask.contains(Scenario::FreeFlow)) {
    auto ff = extract_free_flow(bundle, cfg);
    out.events.insert(out.events.end(), ff.events.begin(), ff.events.end());
    out.freeflow_rows = std::move(ff.rows);
  }

  LaneChangeOutput lane;
  std::vector<NoChangeSegment> segments;
  if (needs_lane) {
    lane = extract_lane_change(bundle, cfg);
    out.counters.lane_candidates = lane.candidates;
    out.counters.lane_unresolved = lane.unresolved;
    out.counters.lane_deduped = lane.deduped;
    segments = build_no_change_segments(bundle, lane.events);
  }

  if (mask.contains(Scenario::CarFollowing)) {
    auto cf = extract_car_following(bundle, segments, cfg);
    out.counters.cipv_conflicting_ticks = cf.cipv_conflicting_ticks;
    out.events.insert(out.events.end(), cf.events.begin(), cf.events.end());
    out.carfollow_rows = std::move(cf.rows);
  }

  if (mask.contains(Scenario::CutIn)) {
    auto ci = extract_cut_in(bundle, segments, cfg);
    out.events.insert(out.events.end(), ci.events.begin(), ci.events.end());
    out.cutin_rows = std::move(ci.rows);
  }

  if (mask.contains(Scenario::LaneChange)) {
    out.events.insert(out.events.end(), lane.events.begin(), lane.events.end());
    out.lanechange_rows = std::move(lane.rows);
  }

  if (mask.contains(Scenario::Pedestrian)) {
    auto ped = extract_pedestrian(bundle, cfg);
    out.counters.vru_events_deleted += ped.deleted_events;
    out.counters.vru_rows_without_gps += ped.rows_without_gps;
    out.events.insert(out.events.end(), ped.events.begin(), ped.events.end());
    out.pedestrian_rows = std::move(ped.rows);
  }

  if (mask.contains(Scenario::Cyclist)) {
    auto cyc = extract_cyclist(bundle, cfg);
    out.counters.vru_events_deleted += cyc.deleted_events;
    out.counters.vru_rows_without_gps += cyc.rows_without_gps;
    out.events.insert(out.events.end(), cyc.events.begin(), cyc.events.end());
    out.cyclist_rows = std::move(cyc.rows);
  }

  std::sort(out.events.begin(), out.events.end(), event_order_less);
  return out;
}

}  // namespace trafficnet
