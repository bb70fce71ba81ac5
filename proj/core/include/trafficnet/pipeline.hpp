#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "trafficnet/extract.hpp"
#include "trafficnet/geo.hpp"
#include "trafficnet/ingest.hpp"
#include "trafficnet/kv.hpp"
#include "trafficnet/types.hpp"

namespace trafficnet {

/// "all" or one scenario name; throws std::runtime_error on anything else.
ScenarioMask parse_scenario_selector(std::string_view selector);

/// ExtractionConfig from a key=value file. Unknown keys throw (they are
/// almost always typos of threshold names).
ExtractionConfig config_from_kv(const KvFile& kv);
KvFile config_to_kv(const ExtractionConfig& cfg);

struct RunOptions {
  std::filesystem::path input_dir;
  std::filesystem::path output_dir;
  ScenarioMask mask = ScenarioMask::all();
  ExtractionConfig config;
  int jobs = 0;  // 0 = one worker per hardware thread
  std::uint64_t spill_threshold_rows = 4'000'000;
};

/// Run audit trail, written as manifest.json next to the outputs. Carries
/// wall-clock time and peak memory, so it is the one output file that is not
/// byte-reproducible across runs.
struct RunManifest {
  std::map<std::string, std::string> config;

  struct InputFile {
    std::string name;
    bool present = false;
    bool sorted = true;
    std::string digest;
    std::uint64_t rows = 0;
  };
  std::vector<InputFile> inputs;

  std::array<LoadCounters, 4> tables{};
  bool partition_buffered = false;

  std::uint64_t trips = 0;
  std::map<std::string, std::uint64_t> event_counts;  // scenario name -> events
  std::uint64_t total_events = 0;
  ExtractionCounters extraction;

  std::uint64_t wall_ms = 0;
  std::uint64_t peak_rss_kb = 0;

  std::string to_json() const;
};

/// Ingests the raw tables from input_dir, runs the selected extractors over
/// every trip (jobs-wide, output order independent of scheduling) and writes
/// per-scenario event/sequence CSVs, rejections.log, stats.csv (full runs
/// only) and manifest.json under output_dir.
RunManifest run_extraction(const RunOptions& options);

/// Scenario table file names inside an output directory.
std::string event_file_name(Scenario s);
std::string sequence_file_name(Scenario s);

std::vector<ScenarioEvent> read_event_csv(const std::filesystem::path& file, Scenario scenario);

/// All events of an output directory (for verify); missing files are skipped.
std::vector<ScenarioEvent> read_all_events(const std::filesystem::path& events_dir);

struct StatsRow {
  std::string scenario;
  std::uint64_t total_events = 0;
};

/// Distinct (Device, Trip, EventId) per event table, in the canonical
/// reporting order; absent tables count zero.
std::vector<StatsRow> compute_stats(const std::filesystem::path& events_dir);

/// Renders stats rows plus the final Sum row in stats.csv layout.
std::string render_stats(const std::vector<StatsRow>& rows);

/// Builds the event-localization GeoJSON for one scenario from an output
/// directory; start positions come from the sequence table's GPS columns.
GeoJsonResult geojson_from_events_dir(const std::filesystem::path& events_dir, Scenario scenario);

/// VmHWM of this process, in KiB (0 if unavailable).
std::uint64_t current_peak_rss_kb();

}  // namespace trafficnet
