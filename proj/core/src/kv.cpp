#include "trafficnet/kv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "trafficnet/csv.hpp"

namespace trafficnet {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

KvFile KvFile::parse(std::string_view text) {
  KvFile kv;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;

    if (std::size_t hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;

    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw std::runtime_error("kv parse error at line " + std::to_string(line_no) +
                               ": expected key = value");
    }
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) {
      throw std::runtime_error("kv parse error at line " + std::to_string(line_no) + ": empty key");
    }
    kv.entries_[key] = value;
  }
  return kv;
}

KvFile KvFile::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

bool KvFile::has(const std::string& key) const { return entries_.count(key) != 0; }

std::optional<std::string> KvFile::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::int64_t KvFile::get_i64(const std::string& key, std::int64_t fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  auto parsed = parse_i64(*v);
  if (!parsed) throw std::runtime_error("kv key '" + key + "': not an integer: " + *v);
  return *parsed;
}

double KvFile::get_f64(const std::string& key, double fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  auto parsed = parse_f64(*v);
  if (!parsed) throw std::runtime_error("kv key '" + key + "': not a number: " + *v);
  return *parsed;
}

bool KvFile::get_bool(const std::string& key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw std::runtime_error("kv key '" + key + "': not a boolean: " + *v);
}

void KvFile::set(const std::string& key, std::string value) { entries_[key] = std::move(value); }

void KvFile::set_i64(const std::string& key, std::int64_t value) {
  entries_[key] = std::to_string(value);
}

void KvFile::set_f64(const std::string& key, double value) {
  entries_[key] = format_f64(value);
}

std::string KvFile::to_text() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  }
  return out;
}

}  // namespace trafficnet
