#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "trafficnet/csv.hpp"
#include "trafficnet/segments.hpp"
#include "trafficnet/types.hpp"
#include "trafficnet/validate.hpp"

namespace trafficnet {

enum class TableKind { Wsu = 0, FrontTargets = 1, Lane = 2, TripSummary = 3 };

inline constexpr std::array<TableKind, 4> kAllTables = {
    TableKind::Wsu, TableKind::FrontTargets, TableKind::Lane, TableKind::TripSummary};

std::string_view table_file_name(TableKind kind);  // e.g. "DataWsu.csv"
std::string_view table_header(TableKind kind);     // exact expected header row
std::string_view table_name(TableKind kind);       // e.g. "DataWsu", for logs

using RejectionFn = std::function<void(const Rejection&)>;

struct LoadCounters {
  std::uint64_t rows = 0;       // data rows read (header excluded)
  std::uint64_t accepted = 0;
  std::uint64_t rejected = 0;
  std::uint64_t duplicates = 0; // same-key rows collapsed during partitioning
};

// Streaming per-table loaders. Rows are validated and handed to `fn` in file
// order; invalid rows go to `reject` and never stop the stream. Structural
// problems (missing file, header mismatch) throw std::runtime_error.
LoadCounters load_wsu_table(const std::filesystem::path& path,
                            const std::function<void(const WsuSample&)>& fn,
                            const RejectionFn& reject);
LoadCounters load_front_targets_table(const std::filesystem::path& path,
                                      const std::function<void(const FrontTargetSample&)>& fn,
                                      const RejectionFn& reject);
LoadCounters load_lane_table(const std::filesystem::path& path,
                             const std::function<void(const LaneSample&)>& fn,
                             const RejectionFn& reject);
LoadCounters load_trip_summary_table(const std::filesystem::path& path,
                                     const std::function<void(const TripSummaryRow&)>& fn,
                                     const RejectionFn& reject);

using AnyRow = std::variant<WsuSample, FrontTargetSample, LaneSample, TripSummaryRow>;

/// Kind-dispatched variant of the loaders above.
LoadCounters load_table(const std::filesystem::path& path, TableKind kind,
                        const std::function<void(const AnyRow&)>& fn, const RejectionFn& reject);

/// All samples of one trip, time-sorted, with duplicates collapsed.
struct TripBundle {
  TripKey key;
  std::vector<WsuSample> wsu;
  std::vector<FrontTargetSample> front_targets;
  std::vector<LaneSample> lanes;
  std::optional<TripSummaryRow> summary;

  bool empty() const { return wsu.empty() && front_targets.empty() && lanes.empty(); }

  /// Trip extent: the summary when present, otherwise observed min/max tick.
  TickRange bounds() const;
};

/// The four tables held in memory; used by the generator and by tests.
struct RawTables {
  std::vector<WsuSample> wsu;
  std::vector<FrontTargetSample> front_targets;
  std::vector<LaneSample> lanes;
  std::vector<TripSummaryRow> summaries;
};

/// Partitions in-memory rows (any order) into bundles in ascending
/// (device, trip) order. `counters`, when given, receives duplicate counts
/// per table.
std::vector<TripBundle> partition_rows(const RawTables& rows,
                                       std::array<LoadCounters, 4>* counters = nullptr);

// Raw-table CSV writers; exact inverses of the loaders.
void write_wsu_row(CsvWriter& w, const WsuSample& r);
void write_front_target_row(CsvWriter& w, const FrontTargetSample& r);
void write_lane_row(CsvWriter& w, const LaneSample& r);
void write_trip_summary_row(CsvWriter& w, const TripSummaryRow& r);

/// Writes the four raw tables under `dir` using the canonical file names
/// and headers.
void write_raw_tables(const RawTables& rows, const std::filesystem::path& dir);

struct PartitionOptions {
  std::filesystem::path input_dir;
  /// Buffered rows across all trips before per-trip buffers spill to disk
  /// (unsorted inputs only).
  std::uint64_t spill_threshold_rows = 4'000'000;
  /// Where spill files go; empty = std::filesystem::temp_directory_path().
  std::filesystem::path spill_dir;
};

/// Per-table result of the sortedness/digest pre-pass.
struct TableScan {
  bool present = false;
  bool sorted = true;  // non-decreasing (device, trip, time)
  std::uint64_t data_rows = 0;
  std::uint64_t digest = kFnvOffset;
};

struct IngestReport {
  std::array<TableScan, 4> scans{};
  std::array<LoadCounters, 4> counters{};
  bool used_buffered_path = false;
};

/// Streams TripBundles out of the four CSV tables in `input_dir` in
/// ascending (device, trip) order.
///
/// A pre-pass measures each file (digest, row count, key order). When every
/// present table is already sorted by (Device, Trip, Time) the bundles are
/// assembled with one trip resident at a time; otherwise rows are buffered
/// per trip, spilling to temporary files past the configured threshold.
///
/// DataWsu.csv, DataFrontTargets.csv and DataLane.csv are required;
/// TripSummary.csv is optional.
class BundleStream {
 public:
  BundleStream(PartitionOptions options, RejectionFn reject);
  ~BundleStream();

  BundleStream(const BundleStream&) = delete;
  BundleStream& operator=(const BundleStream&) = delete;

  /// Next bundle in ascending key order; nullopt at the end.
  std::optional<TripBundle> next();

  /// Counts and digests; complete once next() returned nullopt (digests and
  /// sortedness are valid right after construction).
  const IngestReport& report() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace trafficnet
