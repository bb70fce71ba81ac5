// Command-line front end: extract | stats | geojson | gen | verify.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include "trafficnet/log.hpp"
#include "trafficnet/pipeline.hpp"
#include "trafficnet/synth.hpp"

namespace {

using namespace trafficnet;

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitError = 2;

int cmd_extract(const std::string& input, const std::string& output,
                const std::string& scenario, const std::string& config_path, int jobs) {
  RunOptions options;
  options.input_dir = input;
  options.output_dir = output;
  options.mask = parse_scenario_selector(scenario);
  options.jobs = jobs;
  if (!config_path.empty()) options.config = config_from_kv(KvFile::load(config_path));

  RunManifest manifest = run_extraction(options);

  std::uint64_t rows = 0, rejected = 0, duplicates = 0;
  for (const auto& t : manifest.tables) {
    rows += t.rows;
    rejected += t.rejected;
    duplicates += t.duplicates;
  }
  std::cout << "trips " << manifest.trips << ", rows " << rows << ", rejected " << rejected
            << ", duplicates " << duplicates << ", events " << manifest.total_events << ", "
            << manifest.wall_ms << " ms\n";
  for (const auto& [name, count] : manifest.event_counts) {
    std::cout << "  " << name << ": " << count << "\n";
  }
  return kExitOk;
}

int cmd_stats(const std::string& events_dir) {
  std::cout << render_stats(compute_stats(events_dir));
  return kExitOk;
}

int cmd_geojson(const std::string& events_dir, const std::string& scenario,
                const std::string& output) {
  auto s = scenario_from_name(scenario);
  if (!s) throw std::runtime_error("unknown scenario: " + scenario);
  GeoJsonResult result = geojson_from_events_dir(events_dir, *s);
  std::ofstream out(output, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + output);
  out << result.document;
  if (!out) throw std::runtime_error("failed to write " + output);
  if (result.omitted > 0) {
    log_warn(std::to_string(result.omitted) + " events lacked a start position and were omitted");
  }
  return kExitOk;
}

int cmd_gen(const std::string& spec_path, const std::string& output, std::int64_t seed) {
  TripSpec spec = TripSpec::load(spec_path);
  if (seed >= 0) spec.seed = static_cast<std::uint64_t>(seed);
  SynthOutput synth = generate(spec);
  write_raw_tables(synth.tables, output);
  write_ground_truth(synth.truth.events, std::filesystem::path(output) / kGroundTruthFile);
  std::cout << "generated " << spec.trips << " trips, "
            << synth.tables.wsu.size() + synth.tables.front_targets.size() +
                   synth.tables.lanes.size() + synth.tables.summaries.size()
            << " rows, " << synth.truth.events.size() << " expected events\n";
  return kExitOk;
}

int cmd_verify(const std::string& input_dir, const std::string& events_dir,
               const std::string& config_path) {
  ExtractionConfig cfg;
  if (!config_path.empty()) cfg = config_from_kv(KvFile::load(config_path));

  std::vector<ScenarioEvent> extracted = read_all_events(events_dir);

  // Planted ground truth, when the input directory carries one.
  bool truth_ok = true;
  auto truth_file = std::filesystem::path(input_dir) / kGroundTruthFile;
  if (std::filesystem::exists(truth_file)) {
    auto truth = read_ground_truth(truth_file);
    CompareReport report = compare_events(extracted, truth);
    report.write_csv(std::filesystem::path(events_dir) / "verify_report.csv");
    std::cout << "ground truth: " << report.summary();
    truth_ok = report.ok();
  } else {
    std::cout << "ground truth: no " << kGroundTruthFile << " in " << input_dir << ", skipped\n";
  }

  // Independent re-derivation from the raw tables.
  PartitionOptions part;
  part.input_dir = input_dir;
  BundleStream stream(part, nullptr);
  std::vector<ScenarioEvent> oracle_events;
  while (auto bundle = stream.next()) {
    OracleLabels labels = oracle_labels(*bundle, cfg);
    oracle_events.insert(oracle_events.end(), labels.events.begin(), labels.events.end());
  }
  std::sort(oracle_events.begin(), oracle_events.end(), event_order_less);
  CompareReport oracle_report = compare_events(extracted, oracle_events);
  std::cout << "oracle: " << oracle_report.summary();

  bool ok = truth_ok && oracle_report.ok();
  std::cout << (ok ? "verify OK\n" : "verify FAILED\n");
  return ok ? kExitOk : kExitVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace trafficnet;
  init_logging_from_env();

  CLI::App app{"Scenario mining for naturalistic driving logs"};
  app.require_subcommand(1);

  std::string input, output, scenario = "all", config_path;
  int jobs = 0;
  std::int64_t seed = -1;

  auto* extract = app.add_subcommand("extract", "Mine scenario tables from raw CSV logs");
  extract->add_option("--input", input, "Directory with the raw tables")->required();
  extract->add_option("--output", output, "Directory for the scenario tables")->required();
  extract->add_option("--scenario", scenario,
                      "all|freeflow|carfollowing|cutin|lanechange|pedestrian|cyclist");
  extract->add_option("--config", config_path, "key=value extraction thresholds");
  extract->add_option("--jobs", jobs, "Concurrent trips (0 = hardware threads)");

  auto* stats = app.add_subcommand("stats", "Per-scenario event totals of an output directory");
  stats->add_option("--input", input, "Extraction output directory")->required();

  auto* geojson = app.add_subcommand("geojson", "Event localization as GeoJSON");
  geojson->add_option("--input", input, "Extraction output directory")->required();
  geojson->add_option("--scenario", scenario, "Scenario to export")->required();
  geojson->add_option("--output", output, "GeoJSON file to write")->required();

  auto* gen = app.add_subcommand("gen", "Generate a synthetic corpus with ground truth");
  gen->add_option("--config", config_path, "Corpus spec (key=value)")->required();
  gen->add_option("--output", output, "Directory for the generated tables")->required();
  gen->add_option("--seed", seed, "Override the spec's noise seed");

  auto* verify = app.add_subcommand("verify", "Check extraction output against ground truth "
                                              "and the per-tick oracle");
  verify->add_option("--input", input, "Generated corpus directory")->required();
  verify->add_option("--output", output, "Extraction output directory")->required();
  verify->add_option("--config", config_path, "key=value extraction thresholds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (extract->parsed()) return cmd_extract(input, output, scenario, config_path, jobs);
    if (stats->parsed()) return cmd_stats(input);
    if (geojson->parsed()) return cmd_geojson(input, scenario, output);
    if (gen->parsed()) return cmd_gen(config_path, output, seed);
    if (verify->parsed()) return cmd_verify(input, output, config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
