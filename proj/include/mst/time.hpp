#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>

namespace mst {

/// Virtual clock of the simulation kernel. Ticks are integer nanoseconds since
/// simulation start, so microsecond latencies and minute-long ramps share one
/// exact time base.
struct SimClock {
  using rep = std::int64_t;
  using period = std::nano;
  using duration = std::chrono::duration<rep, period>;
  using time_point = std::chrono::time_point<SimClock>;
  static constexpr bool is_steady = true;
};

using Duration = SimClock::duration;
using SimTime = SimClock::time_point;

inline constexpr SimTime kSimStart{};

/// Seconds (possibly fractional) rounded to the nearest tick.
inline Duration from_seconds(double seconds) {
  return Duration{static_cast<std::int64_t>(std::llround(seconds * 1e9))};
}

inline SimTime at_seconds(double seconds) { return kSimStart + from_seconds(seconds); }

inline double to_seconds(Duration d) { return static_cast<double>(d.count()) * 1e-9; }
inline double to_seconds(SimTime t) { return to_seconds(t.time_since_epoch()); }

inline std::int64_t to_ns(SimTime t) { return t.time_since_epoch().count(); }

}  // namespace mst
