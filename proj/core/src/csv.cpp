#include "trafficnet/csv.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>
#include <system_error>

namespace trafficnet {

std::string fnv_hex(std::uint64_t digest) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest));
  return std::string(buf);
}

std::optional<std::int64_t> parse_i64(std::string_view field) {
  std::int64_t value = 0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || field.empty()) return std::nullopt;
  return value;
}

std::optional<double> parse_f64(std::string_view field) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || field.empty()) return std::nullopt;
  return value;
}

std::string format_f64(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw std::runtime_error("format_f64 failed");
  return std::string(buf, ptr);
}

void append_f64(std::string& out, double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw std::runtime_error("append_f64 failed");
  out.append(buf, ptr);
}

void append_i64(std::string& out, std::int64_t value) {
  char buf[24];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw std::runtime_error("append_i64 failed");
  out.append(buf, ptr);
}

void split_csv(std::string_view line, std::vector<std::string_view>& fields) {
  fields.clear();
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

LineReader::LineReader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
  buf_.resize(1 << 20);
  in_.rdbuf()->pubsetbuf(buf_.data(), static_cast<std::streamsize>(buf_.size()));
}

bool LineReader::next(std::string& line) {
  if (!std::getline(in_, line)) return false;
  digest_ = fnv1a64(line, digest_);
  digest_ = fnv1a64("\n", digest_);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  ++line_number_;
  return true;
}

CsvWriter::CsvWriter(const std::filesystem::path& path) { open(path); }

CsvWriter::~CsvWriter() {
  if (out_.is_open()) close();
}

void CsvWriter::open(const std::filesystem::path& path) {
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw std::runtime_error("cannot open for writing: " + path.string());
  buffer_.reserve(1 << 20);
}

void CsvWriter::write_header(std::string_view header) {
  buffer_.append(header);
  buffer_ += '\n';
  flush_if_large();
}

void CsvWriter::field(std::string_view v) {
  if (row_started_) row_ += ',';
  row_.append(v);
  row_started_ = true;
}

void CsvWriter::field_i64(std::int64_t v) {
  if (row_started_) row_ += ',';
  append_i64(row_, v);
  row_started_ = true;
}

void CsvWriter::field_f64(double v) {
  if (row_started_) row_ += ',';
  append_f64(row_, v);
  row_started_ = true;
}

void CsvWriter::field_empty() {
  if (row_started_) row_ += ',';
  row_started_ = true;
}

void CsvWriter::end_row() {
  buffer_.append(row_);
  buffer_ += '\n';
  row_.clear();
  row_started_ = false;
  flush_if_large();
}

void CsvWriter::flush_if_large() {
  if (buffer_.size() >= (1u << 19)) {
    out_.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
    buffer_.clear();
  }
}

void CsvWriter::close() {
  if (!buffer_.empty()) {
    out_.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
    buffer_.clear();
  }
  out_.close();
  if (out_.fail()) throw std::runtime_error("failed to flush CSV output");
}

}  // namespace trafficnet
