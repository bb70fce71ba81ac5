#pragma once

#include <span>
#include <vector>

#include "trafficnet/types.hpp"

namespace trafficnet {

/// Closed tick interval [start, end].
struct TickRange {
  Tick start = 0;
  Tick end = 0;

  bool contains(Tick t) const { return t >= start && t <= end; }
  Tick length() const { return end - start + 1; }

  friend bool operator==(const TickRange&, const TickRange&) = default;
};

/// Groups a strictly increasing tick list into maximal runs in which
/// consecutive ticks differ by at most `max_gap`. Runs are returned in
/// order and are disjoint.
std::vector<TickRange> segment_runs(std::span<const Tick> ticks, Tick max_gap);

/// The part of `span` not covered by `holes`. Holes may arrive in any
/// order and may overlap or reach outside `span`; they are clipped and
/// merged here. The result is ordered and disjoint.
std::vector<TickRange> complement_within(TickRange span, std::span<const TickRange> holes);

}  // namespace trafficnet
