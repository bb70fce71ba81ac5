#include "trafficnet/segments.hpp"

#include <algorithm>

namespace trafficnet {

std::vector<TickRange> segment_runs(std::span<const Tick> ticks, Tick max_gap) {
  std::vector<TickRange> runs;
  if (ticks.empty()) return runs;

  Tick run_start = ticks.front();
  Tick prev = ticks.front();
  for (std::size_t i = 1; i < ticks.size(); ++i) {
    Tick t = ticks[i];
    if (t - prev > max_gap) {
      runs.push_back({run_start, prev});
      run_start = t;
    }
    prev = t;
  }
  runs.push_back({run_start, prev});
  return runs;
}

std::vector<TickRange> complement_within(TickRange span, std::span<const TickRange> holes) {
  std::vector<TickRange> clipped;
  clipped.reserve(holes.size());
  for (const TickRange& h : holes) {
    Tick s = std::max(h.start, span.start);
    Tick e = std::min(h.end, span.end);
    if (s <= e) clipped.push_back({s, e});
  }
  std::sort(clipped.begin(), clipped.end(),
            [](const TickRange& a, const TickRange& b) { return a.start < b.start; });

  std::vector<TickRange> out;
  Tick cursor = span.start;
  for (const TickRange& h : clipped) {
    if (h.start > cursor) out.push_back({cursor, h.start - 1});
    cursor = std::max(cursor, h.end + 1);
  }
  if (cursor <= span.end) out.push_back({cursor, span.end});
  return out;
}

}  // namespace trafficnet
