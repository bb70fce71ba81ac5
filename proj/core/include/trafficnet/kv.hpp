#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace trafficnet {

/// Flat key=value file: one `key = value` pair per line, `#` starts a
/// comment, blank lines ignored. Used for extraction configs and
/// generator specs.
class KvFile {
 public:
  KvFile() = default;

  static KvFile parse(std::string_view text);       // throws std::runtime_error on bad lines
  static KvFile load(const std::filesystem::path&); // throws on missing file too

  bool has(const std::string& key) const;
  std::optional<std::string> get(const std::string& key) const;
  std::int64_t get_i64(const std::string& key, std::int64_t fallback) const;
  double get_f64(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  void set(const std::string& key, std::string value);
  void set_i64(const std::string& key, std::int64_t value);
  void set_f64(const std::string& key, double value);

  const std::map<std::string, std::string>& entries() const { return entries_; }

  std::string to_text() const;

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace trafficnet
