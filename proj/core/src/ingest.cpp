#include "trafficnet/ingest.hpp"

#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <limits>
#include <random>
#include <stdexcept>
#include <type_traits>

#include "trafficnet/log.hpp"

namespace trafficnet {

namespace {

static_assert(std::is_trivially_copyable_v<WsuSample>);
static_assert(std::is_trivially_copyable_v<FrontTargetSample>);
static_assert(std::is_trivially_copyable_v<LaneSample>);
static_assert(std::is_trivially_copyable_v<TripSummaryRow>);

// ---------------------------------------------------------------------------
// Table codecs: schema + row parse/write per raw table.
// ---------------------------------------------------------------------------

struct WsuCodec {
  using Row = WsuSample;
  static constexpr TableKind kKind = TableKind::Wsu;
  static constexpr std::string_view kFile = "DataWsu.csv";
  static constexpr std::string_view kHeader = "Device,Trip,Time,Latitude,Longitude,Heading,Speed";
  static constexpr std::size_t kFields = 7;

  static std::optional<std::string> parse(const std::vector<std::string_view>& f, Row& out) {
    auto device = parse_i64(f[0]);
    if (!device) return "bad field Device";
    auto trip = parse_i64(f[1]);
    if (!trip) return "bad field Trip";
    auto time = parse_i64(f[2]);
    if (!time) return "bad field Time";
    auto lat = parse_f64(f[3]);
    if (!lat) return "bad field Latitude";
    auto lon = parse_f64(f[4]);
    if (!lon) return "bad field Longitude";
    auto heading = parse_f64(f[5]);
    if (!heading) return "bad field Heading";
    auto speed = parse_f64(f[6]);
    if (!speed) return "bad field Speed";
    out = WsuSample{{{*device, *trip}, *time}, *lat, *lon, *heading, *speed};
    return std::nullopt;
  }

  static RowKey key(const Row& r) { return r.key; }
};

struct FrontCodec {
  using Row = FrontTargetSample;
  static constexpr TableKind kKind = TableKind::FrontTargets;
  static constexpr std::string_view kFile = "DataFrontTargets.csv";
  static constexpr std::string_view kHeader =
      "Device,Trip,Time,ObstacleId,TargetType,CIPV,Range,Transversal,RangeRate";
  static constexpr std::size_t kFields = 9;

  static std::optional<std::string> parse(const std::vector<std::string_view>& f, Row& out) {
    auto device = parse_i64(f[0]);
    if (!device) return "bad field Device";
    auto trip = parse_i64(f[1]);
    if (!trip) return "bad field Trip";
    auto time = parse_i64(f[2]);
    if (!time) return "bad field Time";
    auto obstacle = parse_i64(f[3]);
    if (!obstacle) return "bad field ObstacleId";
    auto type = parse_i64(f[4]);
    if (!type) return "bad field TargetType";
    auto cipv = parse_i64(f[5]);
    if (!cipv) return "bad field CIPV";
    auto range = parse_f64(f[6]);
    if (!range) return "bad field Range";
    auto lateral = parse_f64(f[7]);
    if (!lateral) return "bad field Transversal";
    auto rate = parse_f64(f[8]);
    if (!rate) return "bad field RangeRate";
    out = FrontTargetSample{{{*device, *trip}, *time}, *obstacle, static_cast<int>(*type),
                            static_cast<int>(*cipv),  *range,     *lateral,
                            *rate};
    return std::nullopt;
  }

  static RowKey key(const Row& r) { return r.key; }
};

struct LaneCodec {
  using Row = LaneSample;
  static constexpr TableKind kKind = TableKind::Lane;
  static constexpr std::string_view kFile = "DataLane.csv";
  static constexpr std::string_view kHeader =
      "Device,Trip,Time,LaneDisL,LaneDisR,QualityLeft,QualityRight";
  static constexpr std::size_t kFields = 7;

  static std::optional<std::string> parse(const std::vector<std::string_view>& f, Row& out) {
    auto device = parse_i64(f[0]);
    if (!device) return "bad field Device";
    auto trip = parse_i64(f[1]);
    if (!trip) return "bad field Trip";
    auto time = parse_i64(f[2]);
    if (!time) return "bad field Time";
    auto disl = parse_f64(f[3]);
    if (!disl) return "bad field LaneDisL";
    auto disr = parse_f64(f[4]);
    if (!disr) return "bad field LaneDisR";
    auto ql = parse_i64(f[5]);
    if (!ql) return "bad field QualityLeft";
    auto qr = parse_i64(f[6]);
    if (!qr) return "bad field QualityRight";
    out = LaneSample{{{*device, *trip}, *time},
                     *disl,
                     *disr,
                     static_cast<int>(*ql),
                     static_cast<int>(*qr)};
    return std::nullopt;
  }

  static RowKey key(const Row& r) { return r.key; }
};

struct SummaryCodec {
  using Row = TripSummaryRow;
  static constexpr TableKind kKind = TableKind::TripSummary;
  static constexpr std::string_view kFile = "TripSummary.csv";
  static constexpr std::string_view kHeader =
      "Device,Trip,StartTime,EndTime,DistanceM,BrakeCount,DistanceOver25mphM";
  static constexpr std::size_t kFields = 7;

  static std::optional<std::string> parse(const std::vector<std::string_view>& f, Row& out) {
    auto device = parse_i64(f[0]);
    if (!device) return "bad field Device";
    auto trip = parse_i64(f[1]);
    if (!trip) return "bad field Trip";
    auto start = parse_i64(f[2]);
    if (!start) return "bad field StartTime";
    auto end = parse_i64(f[3]);
    if (!end) return "bad field EndTime";
    auto dist = parse_f64(f[4]);
    if (!dist) return "bad field DistanceM";
    auto brakes = parse_i64(f[5]);
    if (!brakes) return "bad field BrakeCount";
    auto dist25 = parse_f64(f[6]);
    if (!dist25) return "bad field DistanceOver25mphM";
    out = TripSummaryRow{{*device, *trip}, *start, *end, *dist, *brakes, *dist25};
    return std::nullopt;
  }

  // Summaries have no time column; tick 0 keeps RowKey comparisons usable.
  static RowKey key(const Row& r) { return {r.key, 0}; }
};

void check_header(const std::filesystem::path& path, std::string_view expected,
                  const std::string& actual_line) {
  if (actual_line == expected) return;
  std::vector<std::string_view> want, got_fields;
  split_csv(expected, want);
  split_csv(actual_line, got_fields);

  std::string msg = "header mismatch in " + path.string();
  std::string missing, unexpected;
  for (auto w : want) {
    if (std::find(got_fields.begin(), got_fields.end(), w) == got_fields.end()) {
      missing += missing.empty() ? "" : " ";
      missing += w;
    }
  }
  for (auto g : got_fields) {
    if (std::find(want.begin(), want.end(), g) == want.end()) {
      unexpected += unexpected.empty() ? "" : " ";
      unexpected += g;
    }
  }
  if (!missing.empty()) msg += "; missing columns: " + missing;
  if (!unexpected.empty()) msg += "; unexpected columns: " + unexpected;
  throw std::runtime_error(msg);
}

std::string field_or_empty(const std::vector<std::string_view>& f, std::size_t i) {
  return i < f.size() ? std::string(f[i]) : std::string();
}

template <class Codec>
Rejection make_rejection(const std::vector<std::string_view>& fields, std::string reason) {
  Rejection r;
  r.table = table_name(Codec::kKind);
  r.device = field_or_empty(fields, 0);
  r.trip = field_or_empty(fields, 1);
  r.time = Codec::kKind == TableKind::TripSummary ? std::string() : field_or_empty(fields, 2);
  r.reason = std::move(reason);
  return r;
}

template <class Codec>
LoadCounters load_table_impl(const std::filesystem::path& path,
                             const std::function<void(const typename Codec::Row&)>& fn,
                             const RejectionFn& reject) {
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("missing input file: " + path.string());
  }
  LineReader reader(path);
  if (!reader.good()) {
    throw std::runtime_error("cannot open input file: " + path.string());
  }
  std::string line;
  if (!reader.next(line)) {
    throw std::runtime_error("empty file (missing header): " + path.string());
  }
  check_header(path, Codec::kHeader, line);

  LoadCounters counters;
  std::vector<std::string_view> fields;
  fields.reserve(Codec::kFields);
  typename Codec::Row row;
  while (reader.next(line)) {
    if (line.empty()) continue;
    ++counters.rows;
    split_csv(line, fields);
    if (fields.size() != Codec::kFields) {
      ++counters.rejected;
      if (reject) reject(make_rejection<Codec>(fields, "wrong field count"));
      continue;
    }
    if (auto err = Codec::parse(fields, row)) {
      ++counters.rejected;
      if (reject) reject(make_rejection<Codec>(fields, std::move(*err)));
      continue;
    }
    if (auto err = validate_sample(row)) {
      ++counters.rejected;
      if (reject) reject(make_rejection<Codec>(fields, std::move(*err)));
      continue;
    }
    ++counters.accepted;
    fn(row);
  }
  return counters;
}

// ---------------------------------------------------------------------------
// Pre-pass: digest + row count + key-order check, parsing key columns only.
// ---------------------------------------------------------------------------

TableScan scan_table(const std::filesystem::path& path, bool has_time_column) {
  TableScan scan;
  if (!std::filesystem::exists(path)) return scan;
  scan.present = true;

  LineReader reader(path);
  std::string line;
  if (!reader.next(line)) {
    scan.digest = reader.digest();
    return scan;  // structural error surfaces in the main pass
  }
  std::vector<std::string_view> fields;
  RowKey prev{{-1, -1}, -1};
  bool have_prev = false;
  while (reader.next(line)) {
    if (line.empty()) continue;
    ++scan.data_rows;
    if (!scan.sorted) continue;  // keep reading for digest and count
    split_csv(line, fields);
    if (fields.size() < (has_time_column ? 3u : 2u)) continue;
    auto device = parse_i64(fields[0]);
    auto trip = parse_i64(fields[1]);
    std::optional<std::int64_t> time =
        has_time_column ? parse_i64(fields[2]) : std::optional<std::int64_t>(0);
    if (!device || !trip || !time) continue;  // malformed rows are order-neutral
    RowKey key{{*device, *trip}, *time};
    if (have_prev && key < prev) scan.sorted = false;
    prev = key;
    have_prev = true;
  }
  scan.digest = reader.digest();
  return scan;
}

// ---------------------------------------------------------------------------
// Bundle assembly shared by both partitioning paths. Rows arrive in original
// file order; sorting is stable so keep-first dedup preserves that order.
// ---------------------------------------------------------------------------

template <class Row>
std::uint64_t sort_and_dedup_by_tick(std::vector<Row>& rows) {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.key.tick < b.key.tick; });
  std::uint64_t dups = 0;
  auto last = std::unique(rows.begin(), rows.end(), [&](const Row& a, const Row& b) {
    if (a.key.tick == b.key.tick) {
      ++dups;
      return true;
    }
    return false;
  });
  rows.erase(last, rows.end());
  return dups;
}

std::uint64_t sort_and_dedup_front(std::vector<FrontTargetSample>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return std::pair(a.key.tick, a.obstacle_id) < std::pair(b.key.tick, b.obstacle_id);
  });
  std::uint64_t dups = 0;
  auto last = std::unique(rows.begin(), rows.end(), [&](const auto& a, const auto& b) {
    if (a.key.tick == b.key.tick && a.obstacle_id == b.obstacle_id) {
      ++dups;
      return true;
    }
    return false;
  });
  rows.erase(last, rows.end());
  return dups;
}

struct TripBuffers {
  std::vector<WsuSample> wsu;
  std::vector<FrontTargetSample> front;
  std::vector<LaneSample> lane;
  std::vector<TripSummaryRow> summaries;
  // Row counts spilled to disk, per table file; 0 = no spill file.
  std::array<std::uint64_t, 4> spilled{};

  std::size_t buffered() const {
    return wsu.size() + front.size() + lane.size() + summaries.size();
  }
};

template <class Row>
void append_spill(const std::filesystem::path& file, std::vector<Row>& rows,
                  std::uint64_t& spilled) {
  if (rows.empty()) return;
  std::ofstream out(file, std::ios::binary | std::ios::app);
  if (!out) throw std::runtime_error("cannot open spill file: " + file.string());
  out.write(reinterpret_cast<const char*>(rows.data()),
            static_cast<std::streamsize>(rows.size() * sizeof(Row)));
  if (!out) throw std::runtime_error("failed writing spill file: " + file.string());
  spilled += rows.size();
  rows.clear();
  rows.shrink_to_fit();
}

template <class Row>
std::vector<Row> read_spill(const std::filesystem::path& file, std::uint64_t count,
                            std::vector<Row>&& tail) {
  if (count == 0) return std::move(tail);
  std::vector<Row> rows(count);
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot reopen spill file: " + file.string());
  in.read(reinterpret_cast<char*>(rows.data()),
          static_cast<std::streamsize>(count * sizeof(Row)));
  if (static_cast<std::uint64_t>(in.gcount()) != count * sizeof(Row)) {
    throw std::runtime_error("short read from spill file: " + file.string());
  }
  rows.insert(rows.end(), tail.begin(), tail.end());
  return rows;
}

}  // namespace

std::string_view table_file_name(TableKind kind) {
  switch (kind) {
    case TableKind::Wsu: return WsuCodec::kFile;
    case TableKind::FrontTargets: return FrontCodec::kFile;
    case TableKind::Lane: return LaneCodec::kFile;
    case TableKind::TripSummary: return SummaryCodec::kFile;
  }
  return {};
}

std::string_view table_header(TableKind kind) {
  switch (kind) {
    case TableKind::Wsu: return WsuCodec::kHeader;
    case TableKind::FrontTargets: return FrontCodec::kHeader;
    case TableKind::Lane: return LaneCodec::kHeader;
    case TableKind::TripSummary: return SummaryCodec::kHeader;
  }
  return {};
}

std::string_view table_name(TableKind kind) {
  switch (kind) {
    case TableKind::Wsu: return "DataWsu";
    case TableKind::FrontTargets: return "DataFrontTargets";
    case TableKind::Lane: return "DataLane";
    case TableKind::TripSummary: return "TripSummary";
  }
  return {};
}

LoadCounters load_wsu_table(const std::filesystem::path& path,
                            const std::function<void(const WsuSample&)>& fn,
                            const RejectionFn& reject) {
  return load_table_impl<WsuCodec>(path, fn, reject);
}

LoadCounters load_front_targets_table(const std::filesystem::path& path,
                                      const std::function<void(const FrontTargetSample&)>& fn,
                                      const RejectionFn& reject) {
  return load_table_impl<FrontCodec>(path, fn, reject);
}

LoadCounters load_lane_table(const std::filesystem::path& path,
                             const std::function<void(const LaneSample&)>& fn,
                             const RejectionFn& reject) {
  return load_table_impl<LaneCodec>(path, fn, reject);
}

LoadCounters load_trip_summary_table(const std::filesystem::path& path,
                                     const std::function<void(const TripSummaryRow&)>& fn,
                                     const RejectionFn& reject) {
  return load_table_impl<SummaryCodec>(path, fn, reject);
}

LoadCounters load_table(const std::filesystem::path& path, TableKind kind,
                        const std::function<void(const AnyRow&)>& fn, const RejectionFn& reject) {
  switch (kind) {
    case TableKind::Wsu:
      return load_wsu_table(path, [&](const WsuSample& r) { fn(r); }, reject);
    case TableKind::FrontTargets:
      return load_front_targets_table(path, [&](const FrontTargetSample& r) { fn(r); }, reject);
    case TableKind::Lane:
      return load_lane_table(path, [&](const LaneSample& r) { fn(r); }, reject);
    case TableKind::TripSummary:
      return load_trip_summary_table(path, [&](const TripSummaryRow& r) { fn(r); }, reject);
  }
  throw std::runtime_error("unknown table kind");
}

TickRange TripBundle::bounds() const {
  if (summary) return {summary->start_tick, summary->end_tick};
  Tick lo = std::numeric_limits<Tick>::max();
  Tick hi = std::numeric_limits<Tick>::min();
  auto fold = [&](Tick first, Tick last) {
    lo = std::min(lo, first);
    hi = std::max(hi, last);
  };
  if (!wsu.empty()) fold(wsu.front().key.tick, wsu.back().key.tick);
  if (!front_targets.empty()) fold(front_targets.front().key.tick, front_targets.back().key.tick);
  if (!lanes.empty()) fold(lanes.front().key.tick, lanes.back().key.tick);
  if (lo > hi) return {0, -1};
  return {lo, hi};
}

std::vector<TripBundle> partition_rows(const RawTables& rows,
                                       std::array<LoadCounters, 4>* counters) {
  std::map<TripKey, TripBuffers> store;
  for (const auto& r : rows.wsu) store[r.key.trip].wsu.push_back(r);
  for (const auto& r : rows.front_targets) store[r.key.trip].front.push_back(r);
  for (const auto& r : rows.lanes) store[r.key.trip].lane.push_back(r);
  for (const auto& r : rows.summaries) store[r.key].summaries.push_back(r);

  std::vector<TripBundle> bundles;
  bundles.reserve(store.size());
  for (auto& [key, bufs] : store) {
    TripBundle bundle;
    bundle.key = key;
    bundle.wsu = std::move(bufs.wsu);
    bundle.front_targets = std::move(bufs.front);
    bundle.lanes = std::move(bufs.lane);
    std::uint64_t wsu_dups = sort_and_dedup_by_tick(bundle.wsu);
    std::uint64_t front_dups = sort_and_dedup_front(bundle.front_targets);
    std::uint64_t lane_dups = sort_and_dedup_by_tick(bundle.lanes);
    std::uint64_t summary_dups = 0;
    if (!bufs.summaries.empty()) {
      bundle.summary = bufs.summaries.front();
      summary_dups = bufs.summaries.size() - 1;
    }
    if (counters) {
      (*counters)[0].duplicates += wsu_dups;
      (*counters)[1].duplicates += front_dups;
      (*counters)[2].duplicates += lane_dups;
      (*counters)[3].duplicates += summary_dups;
    }
    bundles.push_back(std::move(bundle));
  }
  return bundles;
}

void write_wsu_row(CsvWriter& w, const WsuSample& r) {
  w.field_i64(r.key.trip.device);
  w.field_i64(r.key.trip.trip);
  w.field_i64(r.key.tick);
  w.field_f64(r.latitude);
  w.field_f64(r.longitude);
  w.field_f64(r.heading);
  w.field_f64(r.speed);
  w.end_row();
}

void write_front_target_row(CsvWriter& w, const FrontTargetSample& r) {
  w.field_i64(r.key.trip.device);
  w.field_i64(r.key.trip.trip);
  w.field_i64(r.key.tick);
  w.field_i64(r.obstacle_id);
  w.field_i64(r.target_type);
  w.field_i64(r.cipv);
  w.field_f64(r.range_d);
  w.field_f64(r.lateral_l);
  w.field_f64(r.range_rate);
  w.end_row();
}

void write_lane_row(CsvWriter& w, const LaneSample& r) {
  w.field_i64(r.key.trip.device);
  w.field_i64(r.key.trip.trip);
  w.field_i64(r.key.tick);
  w.field_f64(r.lane_dis_l);
  w.field_f64(r.lane_dis_r);
  w.field_i64(r.quality_left);
  w.field_i64(r.quality_right);
  w.end_row();
}

void write_trip_summary_row(CsvWriter& w, const TripSummaryRow& r) {
  w.field_i64(r.key.device);
  w.field_i64(r.key.trip);
  w.field_i64(r.start_tick);
  w.field_i64(r.end_tick);
  w.field_f64(r.distance_m);
  w.field_i64(r.brake_count);
  w.field_f64(r.distance_over_25mph_m);
  w.end_row();
}

void write_raw_tables(const RawTables& rows, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    CsvWriter w(dir / WsuCodec::kFile);
    w.write_header(WsuCodec::kHeader);
    for (const auto& r : rows.wsu) write_wsu_row(w, r);
    w.close();
  }
  {
    CsvWriter w(dir / FrontCodec::kFile);
    w.write_header(FrontCodec::kHeader);
    for (const auto& r : rows.front_targets) write_front_target_row(w, r);
    w.close();
  }
  {
    CsvWriter w(dir / LaneCodec::kFile);
    w.write_header(LaneCodec::kHeader);
    for (const auto& r : rows.lanes) write_lane_row(w, r);
    w.close();
  }
  {
    CsvWriter w(dir / SummaryCodec::kFile);
    w.write_header(SummaryCodec::kHeader);
    for (const auto& r : rows.summaries) write_trip_summary_row(w, r);
    w.close();
  }
}

// ---------------------------------------------------------------------------
// BundleStream
// ---------------------------------------------------------------------------

struct BundleStream::Impl {
  PartitionOptions options;
  RejectionFn reject;
  IngestReport report;

  // Sorted fast path: one streaming cursor per table.
  template <class Codec>
  struct Cursor {
    std::unique_ptr<LineReader> reader;
    std::vector<std::string_view> fields;
    std::string line;
    typename Codec::Row pending{};
    bool has_pending = false;
    bool done = true;
    LoadCounters* counters = nullptr;
    RejectionFn* reject = nullptr;

    void open(const std::filesystem::path& path, LoadCounters* c, RejectionFn* r) {
      counters = c;
      reject = r;
      reader = std::make_unique<LineReader>(path);
      if (!reader->good()) throw std::runtime_error("cannot open input file: " + path.string());
      if (!reader->next(line)) {
        throw std::runtime_error("empty file (missing header): " + path.string());
      }
      check_header(path, Codec::kHeader, line);
      done = false;
      advance();
    }

    void advance() {
      has_pending = false;
      if (done) return;
      while (reader->next(line)) {
        if (line.empty()) continue;
        ++counters->rows;
        split_csv(line, fields);
        if (fields.size() != Codec::kFields) {
          ++counters->rejected;
          if (*reject) (*reject)(make_rejection<Codec>(fields, "wrong field count"));
          continue;
        }
        if (auto err = Codec::parse(fields, pending)) {
          ++counters->rejected;
          if (*reject) (*reject)(make_rejection<Codec>(fields, std::move(*err)));
          continue;
        }
        if (auto err = validate_sample(pending)) {
          ++counters->rejected;
          if (*reject) (*reject)(make_rejection<Codec>(fields, std::move(*err)));
          continue;
        }
        ++counters->accepted;
        has_pending = true;
        return;
      }
      done = true;
    }

    std::optional<TripKey> peek_trip() const {
      if (!has_pending) return std::nullopt;
      return Codec::key(pending).trip;
    }
  };

  Cursor<WsuCodec> wsu_cursor;
  Cursor<FrontCodec> front_cursor;
  Cursor<LaneCodec> lane_cursor;
  Cursor<SummaryCodec> summary_cursor;
  bool streaming = false;
  bool exhausted = false;

  // Buffered path state.
  std::map<TripKey, TripBuffers> store;
  std::map<TripKey, TripBuffers>::iterator store_it;
  std::filesystem::path spill_root;
  bool spilled_any = false;

  explicit Impl(PartitionOptions opts, RejectionFn rej)
      : options(std::move(opts)), reject(std::move(rej)) {
    const auto& dir = options.input_dir;
    if (!std::filesystem::is_directory(dir)) {
      throw std::runtime_error("input directory does not exist: " + dir.string());
    }
    for (TableKind kind : {TableKind::Wsu, TableKind::FrontTargets, TableKind::Lane}) {
      auto path = dir / table_file_name(kind);
      if (!std::filesystem::exists(path)) {
        throw std::runtime_error("missing input file: " + path.string());
      }
    }

    for (TableKind kind : kAllTables) {
      auto path = dir / table_file_name(kind);
      report.scans[static_cast<int>(kind)] = scan_table(path, kind != TableKind::TripSummary);
    }

    bool all_sorted = true;
    for (const TableScan& s : report.scans) {
      if (s.present && !s.sorted) all_sorted = false;
    }
    streaming = all_sorted;
    report.used_buffered_path = !streaming;

    if (streaming) {
      open_cursors();
    } else {
      log_info("unsorted input detected, partitioning through per-trip buffers");
      load_buffered();
    }
  }

  ~Impl() {
    if (!spill_root.empty()) {
      std::error_code ec;
      std::filesystem::remove_all(spill_root, ec);
    }
  }

  void open_cursors() {
    const auto& dir = options.input_dir;
    wsu_cursor.open(dir / WsuCodec::kFile, &report.counters[0], &reject);
    front_cursor.open(dir / FrontCodec::kFile, &report.counters[1], &reject);
    lane_cursor.open(dir / LaneCodec::kFile, &report.counters[2], &reject);
    if (report.scans[3].present) {
      summary_cursor.open(dir / SummaryCodec::kFile, &report.counters[3], &reject);
    }
  }

  // --- buffered path ---

  const std::filesystem::path& ensure_spill_root() {
    if (spill_root.empty()) {
      auto base = options.spill_dir.empty() ? std::filesystem::temp_directory_path()
                                            : options.spill_dir;
      std::random_device rd;
      spill_root = base / ("trafficnet-spill-" + std::to_string(rd()) + "-" +
                           std::to_string(::getpid()));
      std::filesystem::create_directories(spill_root);
    }
    return spill_root;
  }

  std::filesystem::path spill_file(const TripKey& key, int table) {
    return ensure_spill_root() / (std::to_string(key.device) + "_" + std::to_string(key.trip) +
                                  "_" + std::to_string(table) + ".bin");
  }

  std::uint64_t buffered_rows = 0;

  void maybe_spill() {
    if (buffered_rows < options.spill_threshold_rows) return;
    for (auto& [key, bufs] : store) {
      append_spill(spill_file(key, 0), bufs.wsu, bufs.spilled[0]);
      append_spill(spill_file(key, 1), bufs.front, bufs.spilled[1]);
      append_spill(spill_file(key, 2), bufs.lane, bufs.spilled[2]);
      // summaries are one row per trip; never worth spilling
    }
    spilled_any = true;
    buffered_rows = 0;
    log_info("spilled per-trip buffers to " + spill_root.string());
  }

  void load_buffered() {
    const auto& dir = options.input_dir;
    report.counters[0] = load_table_impl<WsuCodec>(
        dir / WsuCodec::kFile,
        [&](const WsuSample& r) {
          store[r.key.trip].wsu.push_back(r);
          ++buffered_rows;
          maybe_spill();
        },
        reject);
    report.counters[1] = load_table_impl<FrontCodec>(
        dir / FrontCodec::kFile,
        [&](const FrontTargetSample& r) {
          store[r.key.trip].front.push_back(r);
          ++buffered_rows;
          maybe_spill();
        },
        reject);
    report.counters[2] = load_table_impl<LaneCodec>(
        dir / LaneCodec::kFile,
        [&](const LaneSample& r) {
          store[r.key.trip].lane.push_back(r);
          ++buffered_rows;
          maybe_spill();
        },
        reject);
    if (report.scans[3].present) {
      report.counters[3] = load_table_impl<SummaryCodec>(
          dir / SummaryCodec::kFile,
          [&](const TripSummaryRow& r) { store[r.key].summaries.push_back(r); }, reject);
    }
    store_it = store.begin();
  }

  std::optional<TripBundle> next_buffered() {
    if (store_it == store.end()) return std::nullopt;
    const TripKey key = store_it->first;
    TripBuffers& bufs = store_it->second;

    TripBundle bundle;
    bundle.key = key;
    bundle.wsu = read_spill(spill_file_if(key, 0, bufs), bufs.spilled[0], std::move(bufs.wsu));
    bundle.front_targets =
        read_spill(spill_file_if(key, 1, bufs), bufs.spilled[1], std::move(bufs.front));
    bundle.lanes = read_spill(spill_file_if(key, 2, bufs), bufs.spilled[2], std::move(bufs.lane));

    report.counters[0].duplicates += sort_and_dedup_by_tick(bundle.wsu);
    report.counters[1].duplicates += sort_and_dedup_front(bundle.front_targets);
    report.counters[2].duplicates += sort_and_dedup_by_tick(bundle.lanes);
    if (!bufs.summaries.empty()) {
      bundle.summary = bufs.summaries.front();
      report.counters[3].duplicates += bufs.summaries.size() - 1;
    }
    ++store_it;
    return bundle;
  }

  std::filesystem::path spill_file_if(const TripKey& key, int table, const TripBuffers& bufs) {
    return bufs.spilled[table] > 0 ? spill_file(key, table) : std::filesystem::path();
  }

  // --- streaming path ---

  std::optional<TripBundle> next_streaming() {
    std::optional<TripKey> current;
    auto consider = [&](std::optional<TripKey> k) {
      if (k && (!current || *k < *current)) current = k;
    };
    consider(wsu_cursor.peek_trip());
    consider(front_cursor.peek_trip());
    consider(lane_cursor.peek_trip());
    consider(summary_cursor.peek_trip());
    if (!current) return std::nullopt;

    TripBundle bundle;
    bundle.key = *current;
    while (wsu_cursor.peek_trip() == current) {
      bundle.wsu.push_back(wsu_cursor.pending);
      wsu_cursor.advance();
    }
    while (front_cursor.peek_trip() == current) {
      bundle.front_targets.push_back(front_cursor.pending);
      front_cursor.advance();
    }
    while (lane_cursor.peek_trip() == current) {
      bundle.lanes.push_back(lane_cursor.pending);
      lane_cursor.advance();
    }
    while (summary_cursor.peek_trip() == current) {
      if (!bundle.summary) {
        bundle.summary = summary_cursor.pending;
      } else {
        ++report.counters[3].duplicates;
      }
      summary_cursor.advance();
    }

    report.counters[0].duplicates += sort_and_dedup_by_tick(bundle.wsu);
    report.counters[1].duplicates += sort_and_dedup_front(bundle.front_targets);
    report.counters[2].duplicates += sort_and_dedup_by_tick(bundle.lanes);
    return bundle;
  }

  std::optional<TripBundle> next() {
    if (exhausted) return std::nullopt;
    auto bundle = streaming ? next_streaming() : next_buffered();
    if (!bundle) exhausted = true;
    return bundle;
  }
};

BundleStream::BundleStream(PartitionOptions options, RejectionFn reject)
    : impl_(std::make_unique<Impl>(std::move(options), std::move(reject))) {}

BundleStream::~BundleStream() = default;

std::optional<TripBundle> BundleStream::next() { return impl_->next(); }

const IngestReport& BundleStream::report() const { return impl_->report; }

}  // namespace trafficnet
