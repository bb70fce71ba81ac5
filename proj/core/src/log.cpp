#include "trafficnet/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace trafficnet {

namespace {

std::atomic<LogLevel> g_level{LogLevel::Warn};
std::mutex g_mutex;

void emit(LogLevel level, std::string_view tag, std::string_view msg) {
  if (static_cast<int>(level) > static_cast<int>(g_level.load(std::memory_order_relaxed))) return;
  std::lock_guard lock(g_mutex);
  std::cerr << "[" << tag << "] " << msg << "\n";
}

}  // namespace

void init_logging_from_env() {
  const char* env = std::getenv("TRAFFICNET_LOG");
  if (env == nullptr) return;
  std::string v(env);
  if (v == "error") set_log_level(LogLevel::Error);
  else if (v == "warn") set_log_level(LogLevel::Warn);
  else if (v == "info") set_log_level(LogLevel::Info);
  else if (v == "debug") set_log_level(LogLevel::Debug);
}

void set_log_level(LogLevel level) { g_level.store(level, std::memory_order_relaxed); }

LogLevel log_level() { return g_level.load(std::memory_order_relaxed); }

void log_error(std::string_view msg) { emit(LogLevel::Error, "error", msg); }
void log_warn(std::string_view msg) { emit(LogLevel::Warn, "warn", msg); }
void log_info(std::string_view msg) { emit(LogLevel::Info, "info", msg); }
void log_debug(std::string_view msg) { emit(LogLevel::Debug, "debug", msg); }

}  // namespace trafficnet
