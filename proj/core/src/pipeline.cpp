#include "trafficnet/pipeline.hpp"

#include <json.hpp>

#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "trafficnet/csv.hpp"
#include "trafficnet/log.hpp"

namespace trafficnet {

namespace {

// Reporting order of the stats table.
constexpr std::array<Scenario, 6> kStatsOrder = {
    Scenario::FreeFlow, Scenario::Pedestrian,  Scenario::Cyclist,
    Scenario::CarFollowing, Scenario::LaneChange, Scenario::CutIn,
};

constexpr std::string_view kEventHeaderCommon = "Device,Trip,EventId,StartTime,EndTime";

std::string event_header(Scenario s) {
  std::string h(kEventHeaderCommon);
  switch (s) {
    case Scenario::LaneChange: h += ",CrossTime,ChangeDirection,XTime1,XTime2"; break;
    case Scenario::CutIn: h += ",CutTime"; break;
    case Scenario::Pedestrian:
    case Scenario::Cyclist: h += ",ObstacleId"; break;
    default: break;
  }
  return h;
}

std::string sequence_header(Scenario s) {
  switch (s) {
    case Scenario::FreeFlow:
      return "Device,Trip,EventId,Time,Latitude,Longitude,Heading,Speed";
    case Scenario::CarFollowing:
      return "Device,Trip,EventId,Time,ObstacleId,TargetType,CIPV,Range,Transversal,RangeRate,"
             "Latitude,Longitude,Heading,Speed";
    case Scenario::CutIn:
      return "Device,Trip,EventId,Time,Table,Latitude,Longitude,Heading,Speed,ObstacleId,"
             "TargetType,CIPV,Range,Transversal,RangeRate,LaneDisL,LaneDisR,QualityLeft,"
             "QualityRight";
    case Scenario::LaneChange:
      return "Device,Trip,EventId,Time,LaneDisL,LaneDisR,QualityLeft,QualityRight,Latitude,"
             "Longitude,Heading,Speed";
    case Scenario::Pedestrian:
    case Scenario::Cyclist:
      return "Device,Trip,EventId,Time,ObstacleId,Range,Transversal,RangeRate,Latitude,"
             "Longitude,Heading,Speed,TargetLatitude,TargetLongitude";
  }
  return {};
}

void write_event_row(CsvWriter& w, const ScenarioEvent& ev) {
  w.field_i64(ev.trip.device);
  w.field_i64(ev.trip.trip);
  w.field_i64(ev.event_id);
  w.field_i64(ev.start_tick);
  w.field_i64(ev.end_tick);
  switch (ev.scenario) {
    case Scenario::LaneChange:
      w.field_i64(ev.cross_time.value_or(0));
      w.field(change_direction_name(ev.change_direction.value_or(ChangeDirection::Left)));
      w.field_i64(ev.x_time1.value_or(0));
      w.field_i64(ev.x_time2.value_or(0));
      break;
    case Scenario::CutIn:
      w.field_i64(ev.cut_tick.value_or(0));
      break;
    case Scenario::Pedestrian:
    case Scenario::Cyclist:
      w.field_i64(ev.obstacle_id.value_or(0));
      break;
    default:
      break;
  }
  w.end_row();
}

void write_gps_fields(CsvWriter& w, const std::optional<GpsFix>& gps) {
  if (gps) {
    w.field_f64(gps->latitude);
    w.field_f64(gps->longitude);
    w.field_f64(gps->heading);
    w.field_f64(gps->speed);
  } else {
    w.field_empty();
    w.field_empty();
    w.field_empty();
    w.field_empty();
  }
}

struct ScenarioWriters {
  std::array<std::unique_ptr<CsvWriter>, 6> events;
  std::array<std::unique_ptr<CsvWriter>, 6> sequences;

  CsvWriter& event_writer(Scenario s) { return *events[static_cast<int>(s)]; }
  CsvWriter& sequence_writer(Scenario s) { return *sequences[static_cast<int>(s)]; }
};

void write_trip(const TripExtraction& trip, ScenarioWriters& writers, const ScenarioMask& mask,
                RunManifest& manifest) {
  for (const ScenarioEvent& ev : trip.events) {
    write_event_row(writers.event_writer(ev.scenario), ev);
    ++manifest.event_counts[std::string(scenario_name(ev.scenario))];
    ++manifest.total_events;
  }

  const TripKey key = trip.key;
  if (mask.contains(Scenario::FreeFlow)) {
    CsvWriter& w = writers.sequence_writer(Scenario::FreeFlow);
    for (const FreeFlowSeqRow& row : trip.freeflow_rows) {
      w.field_i64(key.device);
      w.field_i64(key.trip);
      w.field_i64(row.event_id);
      w.field_i64(row.sample.key.tick);
      w.field_f64(row.sample.latitude);
      w.field_f64(row.sample.longitude);
      w.field_f64(row.sample.heading);
      w.field_f64(row.sample.speed);
      w.end_row();
    }
  }
  if (mask.contains(Scenario::CarFollowing)) {
    CsvWriter& w = writers.sequence_writer(Scenario::CarFollowing);
    for (const CarFollowSeqRow& row : trip.carfollow_rows) {
      w.field_i64(key.device);
      w.field_i64(key.trip);
      w.field_i64(row.event_id);
      w.field_i64(row.target.key.tick);
      w.field_i64(row.target.obstacle_id);
      w.field_i64(row.target.target_type);
      w.field_i64(row.target.cipv);
      w.field_f64(row.target.range_d);
      w.field_f64(row.target.lateral_l);
      w.field_f64(row.target.range_rate);
      write_gps_fields(w, row.gps);
      w.end_row();
    }
  }
  if (mask.contains(Scenario::CutIn)) {
    CsvWriter& w = writers.sequence_writer(Scenario::CutIn);
    for (const CutInSeqRow& row : trip.cutin_rows) {
      w.field_i64(key.device);
      w.field_i64(key.trip);
      w.field_i64(row.event_id);
      w.field_i64(row.tick());
      if (const auto* wsu = std::get_if<WsuSample>(&row.payload)) {
        w.field("wsu");
        w.field_f64(wsu->latitude);
        w.field_f64(wsu->longitude);
        w.field_f64(wsu->heading);
        w.field_f64(wsu->speed);
        for (int i = 0; i < 10; ++i) w.field_empty();
      } else if (const auto* target = std::get_if<FrontTargetSample>(&row.payload)) {
        w.field("fronttargets");
        write_gps_fields(w, row.gps);
        w.field_i64(target->obstacle_id);
        w.field_i64(target->target_type);
        w.field_i64(target->cipv);
        w.field_f64(target->range_d);
        w.field_f64(target->lateral_l);
        w.field_f64(target->range_rate);
        for (int i = 0; i < 4; ++i) w.field_empty();
      } else {
        const auto& lane = std::get<LaneSample>(row.payload);
        w.field("lane");
        write_gps_fields(w, row.gps);
        for (int i = 0; i < 6; ++i) w.field_empty();
        w.field_f64(lane.lane_dis_l);
        w.field_f64(lane.lane_dis_r);
        w.field_i64(lane.quality_left);
        w.field_i64(lane.quality_right);
      }
      w.end_row();
    }
  }
  if (mask.contains(Scenario::LaneChange)) {
    CsvWriter& w = writers.sequence_writer(Scenario::LaneChange);
    for (const LaneChangeSeqRow& row : trip.lanechange_rows) {
      w.field_i64(key.device);
      w.field_i64(key.trip);
      w.field_i64(row.event_id);
      w.field_i64(row.lane.key.tick);
      w.field_f64(row.lane.lane_dis_l);
      w.field_f64(row.lane.lane_dis_r);
      w.field_i64(row.lane.quality_left);
      w.field_i64(row.lane.quality_right);
      write_gps_fields(w, row.gps);
      w.end_row();
    }
  }
  auto write_vru = [&](Scenario s, const std::vector<VruSeqRow>& rows) {
    CsvWriter& w = writers.sequence_writer(s);
    for (const VruSeqRow& row : rows) {
      w.field_i64(key.device);
      w.field_i64(key.trip);
      w.field_i64(row.event_id);
      w.field_i64(row.target.key.tick);
      w.field_i64(row.target.obstacle_id);
      w.field_f64(row.target.range_d);
      w.field_f64(row.target.lateral_l);
      w.field_f64(row.target.range_rate);
      write_gps_fields(w, row.gps);
      // Target position via the vehicle-frame transform when GPS is known.
      bool placed = false;
      if (row.gps) {
        try {
          GeoPoint p = vehicle_frame_to_global({row.gps->latitude, row.gps->longitude},
                                               row.gps->heading, row.target.range_d,
                                               row.target.lateral_l);
          w.field_f64(p.latitude);
          w.field_f64(p.longitude);
          placed = true;
        } catch (const std::domain_error&) {
        }
      }
      if (!placed) {
        w.field_empty();
        w.field_empty();
      }
      w.end_row();
    }
  };
  if (mask.contains(Scenario::Pedestrian)) write_vru(Scenario::Pedestrian, trip.pedestrian_rows);
  if (mask.contains(Scenario::Cyclist)) write_vru(Scenario::Cyclist, trip.cyclist_rows);

  manifest.extraction.lane_candidates += trip.counters.lane_candidates;
  manifest.extraction.lane_unresolved += trip.counters.lane_unresolved;
  manifest.extraction.lane_deduped += trip.counters.lane_deduped;
  manifest.extraction.cipv_conflicting_ticks += trip.counters.cipv_conflicting_ticks;
  manifest.extraction.vru_events_deleted += trip.counters.vru_events_deleted;
  manifest.extraction.vru_rows_without_gps += trip.counters.vru_rows_without_gps;
  ++manifest.trips;
}

}  // namespace

ScenarioMask parse_scenario_selector(std::string_view selector) {
  if (selector == "all") return ScenarioMask::all();
  if (auto s = scenario_from_name(selector)) return ScenarioMask::only(*s);
  throw std::runtime_error("unknown scenario selector: " + std::string(selector) +
                           " (expected all|freeflow|carfollowing|cutin|lanechange|pedestrian|"
                           "cyclist)");
}

ExtractionConfig config_from_kv(const KvFile& kv) {
  static const std::set<std::string> known = {
      "half_width_m",       "lane_jump_min_m",  "lane_jump_max_m", "lane_pair_window_ticks",
      "lane_dedup_ticks",   "quality_min",      "cutin_window_ticks", "pedestrian_min_rows",
      "cyclist_min_rows",   "freeflow_gap_ticks", "track_gap_ticks", "cutin_same_track_only",
  };
  for (const auto& [key, value] : kv.entries()) {
    if (!known.count(key)) throw std::runtime_error("unknown config key: " + key);
  }
  ExtractionConfig cfg;
  cfg.half_width_m = kv.get_f64("half_width_m", cfg.half_width_m);
  cfg.lane_jump_min_m = kv.get_f64("lane_jump_min_m", cfg.lane_jump_min_m);
  cfg.lane_jump_max_m = kv.get_f64("lane_jump_max_m", cfg.lane_jump_max_m);
  cfg.lane_pair_window_ticks = kv.get_i64("lane_pair_window_ticks", cfg.lane_pair_window_ticks);
  cfg.lane_dedup_ticks = kv.get_i64("lane_dedup_ticks", cfg.lane_dedup_ticks);
  cfg.quality_min = static_cast<int>(kv.get_i64("quality_min", cfg.quality_min));
  cfg.cutin_window_ticks = kv.get_i64("cutin_window_ticks", cfg.cutin_window_ticks);
  cfg.pedestrian_min_rows =
      static_cast<int>(kv.get_i64("pedestrian_min_rows", cfg.pedestrian_min_rows));
  cfg.cyclist_min_rows = static_cast<int>(kv.get_i64("cyclist_min_rows", cfg.cyclist_min_rows));
  cfg.freeflow_gap_ticks = kv.get_i64("freeflow_gap_ticks", cfg.freeflow_gap_ticks);
  cfg.track_gap_ticks = kv.get_i64("track_gap_ticks", cfg.track_gap_ticks);
  cfg.cutin_same_track_only = kv.get_bool("cutin_same_track_only", cfg.cutin_same_track_only);
  if (auto err = cfg.validate()) throw std::runtime_error("invalid config: " + *err);
  return cfg;
}

KvFile config_to_kv(const ExtractionConfig& cfg) {
  KvFile kv;
  kv.set_f64("half_width_m", cfg.half_width_m);
  kv.set_f64("lane_jump_min_m", cfg.lane_jump_min_m);
  kv.set_f64("lane_jump_max_m", cfg.lane_jump_max_m);
  kv.set_i64("lane_pair_window_ticks", cfg.lane_pair_window_ticks);
  kv.set_i64("lane_dedup_ticks", cfg.lane_dedup_ticks);
  kv.set_i64("quality_min", cfg.quality_min);
  kv.set_i64("cutin_window_ticks", cfg.cutin_window_ticks);
  kv.set_i64("pedestrian_min_rows", cfg.pedestrian_min_rows);
  kv.set_i64("cyclist_min_rows", cfg.cyclist_min_rows);
  kv.set_i64("freeflow_gap_ticks", cfg.freeflow_gap_ticks);
  kv.set_i64("track_gap_ticks", cfg.track_gap_ticks);
  kv.set("cutin_same_track_only", cfg.cutin_same_track_only ? "true" : "false");
  return kv;
}

std::string event_file_name(Scenario s) {
  return std::string(scenario_name(s)) + "_event.csv";
}

std::string sequence_file_name(Scenario s) {
  return std::string(scenario_name(s)) + "_sequence.csv";
}

std::uint64_t current_peak_rss_kb() {
  std::ifstream in("/proc/self/status");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("VmHWM:", 0) == 0) {
      std::uint64_t kb = 0;
      for (char c : line) {
        if (c >= '0' && c <= '9') kb = kb * 10 + static_cast<std::uint64_t>(c - '0');
      }
      return kb;
    }
  }
  return 0;
}

RunManifest run_extraction(const RunOptions& options) {
  const auto start_time = std::chrono::steady_clock::now();
  if (auto err = options.config.validate()) {
    throw std::runtime_error("invalid config: " + *err);
  }
  std::filesystem::create_directories(options.output_dir);

  RunManifest manifest;
  const KvFile config_snapshot = config_to_kv(options.config);
  manifest.config = config_snapshot.entries();
  for (Scenario s : kAllScenarios) {
    if (options.mask.contains(s)) manifest.event_counts[std::string(scenario_name(s))] = 0;
  }

  std::ofstream rejections(options.output_dir / "rejections.log",
                           std::ios::binary | std::ios::trunc);
  if (!rejections) throw std::runtime_error("cannot open rejections.log for writing");
  std::mutex reject_mu;
  auto reject = [&](const Rejection& r) {
    std::lock_guard lock(reject_mu);
    rejections << r.to_line() << '\n';
  };

  PartitionOptions part;
  part.input_dir = options.input_dir;
  part.spill_threshold_rows = options.spill_threshold_rows;
  BundleStream stream(part, reject);

  ScenarioWriters writers;
  for (Scenario s : kAllScenarios) {
    if (!options.mask.contains(s)) continue;
    auto ev = std::make_unique<CsvWriter>(options.output_dir / event_file_name(s));
    ev->write_header(event_header(s));
    auto seq = std::make_unique<CsvWriter>(options.output_dir / sequence_file_name(s));
    seq->write_header(sequence_header(s));
    writers.events[static_cast<int>(s)] = std::move(ev);
    writers.sequences[static_cast<int>(s)] = std::move(seq);
  }

  unsigned jobs = options.jobs > 0 ? static_cast<unsigned>(options.jobs)
                                   : std::max(1u, std::thread::hardware_concurrency());

  if (jobs <= 1) {
    while (auto bundle = stream.next()) {
      TripExtraction trip = extract_trip(*bundle, options.config, options.mask);
      write_trip(trip, writers, options.mask, manifest);
    }
  } else {
    // Workers extract bundles out of order; trips are written strictly in
    // bundle order so the outputs do not depend on scheduling.
    std::mutex mu;
    std::condition_variable work_cv, result_cv;
    std::deque<std::pair<std::size_t, TripBundle>> pending;
    std::map<std::size_t, TripExtraction> results;
    bool done_reading = false;
    const std::size_t max_pending = jobs * 2;
    const std::size_t max_results = jobs * 4;

    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (unsigned i = 0; i < jobs; ++i) {
      workers.emplace_back([&] {
        while (true) {
          std::pair<std::size_t, TripBundle> task;
          {
            std::unique_lock lock(mu);
            work_cv.wait(lock, [&] { return !pending.empty() || done_reading; });
            if (pending.empty()) return;
            task = std::move(pending.front());
            pending.pop_front();
          }
          TripExtraction trip = extract_trip(task.second, options.config, options.mask);
          {
            std::lock_guard lock(mu);
            results.emplace(task.first, std::move(trip));
          }
          result_cv.notify_all();
        }
      });
    }

    std::size_t next_index = 0, next_write = 0;
    // Writes the next in-order result, if completed. Expects `lock` held;
    // drops it around the actual file IO.
    auto write_next_ready = [&](std::unique_lock<std::mutex>& lock) {
      auto it = results.find(next_write);
      if (it == results.end()) return false;
      TripExtraction trip = std::move(it->second);
      results.erase(it);
      lock.unlock();
      write_trip(trip, writers, options.mask, manifest);
      lock.lock();
      ++next_write;
      return true;
    };

    while (auto bundle = stream.next()) {
      {
        std::unique_lock lock(mu);
        while (true) {
          if (write_next_ready(lock)) continue;
          if (pending.size() < max_pending && results.size() < max_results) break;
          result_cv.wait(lock);
        }
        pending.emplace_back(next_index++, std::move(*bundle));
      }
      work_cv.notify_one();
    }
    {
      std::unique_lock lock(mu);
      done_reading = true;
      work_cv.notify_all();
      while (next_write < next_index) {
        if (write_next_ready(lock)) continue;
        result_cv.wait(lock);
      }
    }
    for (auto& t : workers) t.join();
  }

  for (Scenario s : kAllScenarios) {
    if (!options.mask.contains(s)) continue;
    writers.event_writer(s).close();
    writers.sequence_writer(s).close();
  }
  rejections.flush();
  rejections.close();

  if (options.mask.is_all()) {
    std::vector<StatsRow> rows;
    for (Scenario s : kStatsOrder) {
      rows.push_back({std::string(scenario_name(s)),
                      manifest.event_counts[std::string(scenario_name(s))]});
    }
    std::ofstream stats(options.output_dir / "stats.csv", std::ios::binary | std::ios::trunc);
    stats << render_stats(rows);
    if (!stats) throw std::runtime_error("failed to write stats.csv");
  }

  const IngestReport& report = stream.report();
  manifest.tables = report.counters;
  manifest.partition_buffered = report.used_buffered_path;
  for (TableKind kind : kAllTables) {
    const TableScan& scan = report.scans[static_cast<int>(kind)];
    RunManifest::InputFile f;
    f.name = std::string(table_file_name(kind));
    f.present = scan.present;
    f.sorted = scan.sorted;
    f.digest = scan.present ? fnv_hex(scan.digest) : "";
    f.rows = scan.data_rows;
    manifest.inputs.push_back(std::move(f));
  }

  manifest.wall_ms = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                            start_time)
          .count());
  manifest.peak_rss_kb = current_peak_rss_kb();

  std::ofstream mf(options.output_dir / "manifest.json", std::ios::binary | std::ios::trunc);
  mf << manifest.to_json();
  if (!mf) throw std::runtime_error("failed to write manifest.json");
  return manifest;
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["config"] = config;
  j["inputs"] = nlohmann::ordered_json::array();
  for (const auto& f : inputs) {
    nlohmann::ordered_json e;
    e["file"] = f.name;
    e["present"] = f.present;
    if (f.present) {
      e["sorted"] = f.sorted;
      e["digest_fnv1a64"] = f.digest;
      e["rows"] = f.rows;
    }
    j["inputs"].push_back(e);
  }
  auto table_counters = nlohmann::ordered_json::object();
  for (TableKind kind : kAllTables) {
    const LoadCounters& c = tables[static_cast<int>(kind)];
    nlohmann::ordered_json e;
    e["rows"] = c.rows;
    e["accepted"] = c.accepted;
    e["rejected"] = c.rejected;
    e["duplicates"] = c.duplicates;
    table_counters[std::string(table_name(kind))] = e;
  }
  j["tables"] = table_counters;
  j["partition_buffered"] = partition_buffered;
  j["trips"] = trips;
  j["events"] = event_counts;
  j["total_events"] = total_events;
  j["extraction"] = {
      {"lane_candidates", extraction.lane_candidates},
      {"lane_unresolved", extraction.lane_unresolved},
      {"lane_deduped", extraction.lane_deduped},
      {"cipv_conflicting_ticks", extraction.cipv_conflicting_ticks},
      {"vru_events_deleted", extraction.vru_events_deleted},
      {"vru_rows_without_gps", extraction.vru_rows_without_gps},
  };
  j["wall_ms"] = wall_ms;
  j["peak_rss_kb"] = peak_rss_kb;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Output readers
// ---------------------------------------------------------------------------

std::vector<ScenarioEvent> read_event_csv(const std::filesystem::path& file, Scenario scenario) {
  LineReader reader(file);
  if (!reader.good()) throw std::runtime_error("cannot open " + file.string());
  std::string line;
  if (!reader.next(line) || line != event_header(scenario)) {
    throw std::runtime_error("unexpected event header in " + file.string());
  }
  std::vector<ScenarioEvent> events;
  std::vector<std::string_view> f;
  while (reader.next(line)) {
    if (line.empty()) continue;
    split_csv(line, f);
    auto device = parse_i64(f[0]);
    auto trip = parse_i64(f[1]);
    auto id = parse_i64(f[2]);
    auto start = parse_i64(f[3]);
    auto end = parse_i64(f[4]);
    if (!device || !trip || !id || !start || !end) {
      throw std::runtime_error("bad event row in " + file.string());
    }
    ScenarioEvent ev;
    ev.scenario = scenario;
    ev.trip = {*device, *trip};
    ev.event_id = *id;
    ev.start_tick = *start;
    ev.end_tick = *end;
    switch (scenario) {
      case Scenario::LaneChange:
        if (f.size() != 9) throw std::runtime_error("bad event row in " + file.string());
        ev.cross_time = parse_i64(f[5]);
        ev.change_direction = change_direction_from_name(f[6]);
        ev.x_time1 = parse_i64(f[7]);
        ev.x_time2 = parse_i64(f[8]);
        break;
      case Scenario::CutIn:
        if (f.size() != 6) throw std::runtime_error("bad event row in " + file.string());
        ev.cut_tick = parse_i64(f[5]);
        break;
      case Scenario::Pedestrian:
      case Scenario::Cyclist:
        if (f.size() != 6) throw std::runtime_error("bad event row in " + file.string());
        ev.obstacle_id = parse_i64(f[5]);
        break;
      default:
        if (f.size() != 5) throw std::runtime_error("bad event row in " + file.string());
        break;
    }
    events.push_back(ev);
  }
  return events;
}

std::vector<ScenarioEvent> read_all_events(const std::filesystem::path& events_dir) {
  std::vector<ScenarioEvent> all;
  for (Scenario s : kAllScenarios) {
    auto file = events_dir / event_file_name(s);
    if (!std::filesystem::exists(file)) continue;
    auto events = read_event_csv(file, s);
    all.insert(all.end(), events.begin(), events.end());
  }
  std::sort(all.begin(), all.end(), event_order_less);
  return all;
}

std::vector<StatsRow> compute_stats(const std::filesystem::path& events_dir) {
  std::vector<StatsRow> rows;
  for (Scenario s : kStatsOrder) {
    StatsRow row{std::string(scenario_name(s)), 0};
    auto file = events_dir / event_file_name(s);
    if (std::filesystem::exists(file)) {
      LineReader reader(file);
      std::string line;
      if (!reader.next(line) || line != event_header(s)) {
        throw std::runtime_error("unexpected event header in " + file.string());
      }
      std::set<std::tuple<std::int64_t, std::int64_t, std::int64_t>> keys;
      std::vector<std::string_view> f;
      while (reader.next(line)) {
        if (line.empty()) continue;
        split_csv(line, f);
        if (f.size() < 3) throw std::runtime_error("bad event row in " + file.string());
        auto device = parse_i64(f[0]);
        auto trip = parse_i64(f[1]);
        auto id = parse_i64(f[2]);
        if (!device || !trip || !id) {
          throw std::runtime_error("bad event row in " + file.string());
        }
        keys.emplace(*device, *trip, *id);
      }
      row.total_events = keys.size();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string render_stats(const std::vector<StatsRow>& rows) {
  std::string out = "Scenario,TotalEvents\n";
  std::uint64_t sum = 0;
  for (const StatsRow& row : rows) {
    out += row.scenario;
    out += ',';
    out += std::to_string(row.total_events);
    out += '\n';
    sum += row.total_events;
  }
  out += "Sum,";
  out += std::to_string(sum);
  out += '\n';
  return out;
}

GeoJsonResult geojson_from_events_dir(const std::filesystem::path& events_dir,
                                      Scenario scenario) {
  auto events = read_event_csv(events_dir / event_file_name(scenario), scenario);

  std::map<std::tuple<std::int64_t, std::int64_t, std::int64_t>, std::size_t> index;
  for (std::size_t i = 0; i < events.size(); ++i) {
    index[{events[i].trip.device, events[i].trip.trip, events[i].event_id}] = i;
  }
  std::vector<std::optional<GeoPoint>> positions(events.size());

  auto file = events_dir / sequence_file_name(scenario);
  LineReader reader(file);
  if (!reader.good()) throw std::runtime_error("cannot open " + file.string());
  std::string line;
  if (!reader.next(line)) throw std::runtime_error("empty sequence file: " + file.string());

  std::vector<std::string_view> header;
  split_csv(line, header);
  auto column = [&](std::string_view name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<std::ptrdiff_t>(i);
    }
    return static_cast<std::ptrdiff_t>(-1);
  };
  const auto c_device = column("Device"), c_trip = column("Trip"), c_event = column("EventId"),
             c_time = column("Time"), c_lat = column("Latitude"), c_lon = column("Longitude");
  if (c_device < 0 || c_trip < 0 || c_event < 0 || c_time < 0 || c_lat < 0 || c_lon < 0) {
    throw std::runtime_error("sequence file lacks GPS columns: " + file.string());
  }

  std::vector<std::string_view> f;
  while (reader.next(line)) {
    if (line.empty()) continue;
    split_csv(line, f);
    if (static_cast<std::ptrdiff_t>(f.size()) <= std::max(c_lat, c_lon)) continue;
    auto device = parse_i64(f[c_device]);
    auto trip = parse_i64(f[c_trip]);
    auto id = parse_i64(f[c_event]);
    auto time = parse_i64(f[c_time]);
    if (!device || !trip || !id || !time) continue;
    auto it = index.find({*device, *trip, *id});
    if (it == index.end()) continue;
    const ScenarioEvent& ev = events[it->second];
    if (*time != ev.start_tick || positions[it->second]) continue;
    auto lat = parse_f64(f[c_lat]);
    auto lon = parse_f64(f[c_lon]);
    if (!lat || !lon) continue;  // row without GPS join
    positions[it->second] = GeoPoint{*lat, *lon};
  }

  return emit_geojson(events, positions);
}

}  // namespace trafficnet
