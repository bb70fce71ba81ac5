#pragma once

#include <optional>
#include <string>

#include "trafficnet/types.hpp"

namespace trafficnet {

/// A row that failed validation or parsing. Key fields are kept as the raw
/// text that was read, so unparseable rows can still be identified in the log.
struct Rejection {
  std::string table;
  std::string device;
  std::string trip;
  std::string time;
  std::string reason;

  /// Rejection log line: TABLE,DEVICE,TRIP,TIME,REASON
  std::string to_line() const;
};

// Per-type field validation. Returns the violated rule, or nullopt when the
// sample is acceptable. Rejection is a value, never an exception.
std::optional<std::string> validate_sample(const WsuSample& s);
std::optional<std::string> validate_sample(const FrontTargetSample& s);
std::optional<std::string> validate_sample(const LaneSample& s);
std::optional<std::string> validate_sample(const TripSummaryRow& s);

}  // namespace trafficnet
