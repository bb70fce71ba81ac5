#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trafficnet {

// FNV-1a 64-bit, used for input-file digests in the run manifest.
inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x00000100000001b3ULL;

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state = kFnvOffset) {
  for (unsigned char c : bytes) {
    state ^= c;
    state *= kFnvPrime;
  }
  return state;
}

std::string fnv_hex(std::uint64_t digest);

std::optional<std::int64_t> parse_i64(std::string_view field);
std::optional<double> parse_f64(std::string_view field);

/// Shortest representation that parses back to the same double.
std::string format_f64(double value);
void append_f64(std::string& out, double value);
void append_i64(std::string& out, std::int64_t value);

/// Splits one CSV line on commas into `fields`. No quoting: the raw tables
/// are purely numeric and reasons in logs avoid commas.
void split_csv(std::string_view line, std::vector<std::string_view>& fields);

/// Buffered line reader that strips trailing \r and folds every byte it
/// reads (including newlines) into an FNV-1a digest.
class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path);

  bool good() const { return static_cast<bool>(in_); }

  /// Next line without the terminator; false at end of file.
  bool next(std::string& line);

  std::uint64_t digest() const { return digest_; }
  std::uint64_t line_number() const { return line_number_; }

 private:
  std::ifstream in_;
  std::vector<char> buf_;
  std::uint64_t digest_ = kFnvOffset;
  std::uint64_t line_number_ = 0;
};

/// Buffered CSV writer. Rows are assembled in `row()` and flushed with
/// `end_row()`; fields are appended with the append_* helpers.
class CsvWriter {
 public:
  CsvWriter() = default;
  explicit CsvWriter(const std::filesystem::path& path);
  ~CsvWriter();

  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void open(const std::filesystem::path& path);
  bool is_open() const { return out_.is_open(); }

  void write_header(std::string_view header);

  std::string& row() { return row_; }
  void field(std::string_view v);
  void field_i64(std::int64_t v);
  void field_f64(double v);
  void field_empty();
  void end_row();

  void close();

 private:
  std::ofstream out_;
  std::string row_;
  std::string buffer_;
  bool row_started_ = false;

  void flush_if_large();
};

}  // namespace trafficnet
