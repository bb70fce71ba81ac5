#pragma once

#include <string_view>

namespace trafficnet {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

/// Reads TRAFFICNET_LOG (error|warn|info|debug) and sets the global level.
/// Unset or unknown values default to warn.
void init_logging_from_env();

void set_log_level(LogLevel level);
LogLevel log_level();

void log_error(std::string_view msg);
void log_warn(std::string_view msg);
void log_info(std::string_view msg);
void log_debug(std::string_view msg);

}  // namespace trafficnet
