#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mst/time.hpp"

namespace mst {

using EventId = std::uint64_t;

struct TraceRecord {
  std::int64_t fire_at_ns;
  std::uint64_t sequence;
  std::string kind;

  bool operator==(const TraceRecord&) const = default;
};

/// Single-threaded discrete-event scheduler.
///
/// Events are totally ordered by (fire_at, sequence); the sequence number doubles
/// as the event id. Handlers may schedule further events, including at the
/// current tick. A kernel owns no shared state, so separate instances can run on
/// separate threads.
class Kernel {
 public:
  using Handler = std::function<void(Kernel&)>;

  static constexpr std::uint64_t kDefaultEventCap = 100'000'000;

  explicit Kernel(std::uint64_t event_cap = kDefaultEventCap) : event_cap_(event_cap) {}

  Kernel(const Kernel&) = delete;
  Kernel& operator=(const Kernel&) = delete;

  /// Throws Error(SchedulingInPast) if `at < now()`.
  EventId schedule(SimTime at, std::string_view kind, Handler handler);
  EventId schedule_in(Duration delay, std::string_view kind, Handler handler) {
    return schedule(now_ + delay, kind, std::move(handler));
  }

  /// True iff the event was pending; a cancelled event never fires.
  bool cancel(EventId id);

  SimTime now() const { return now_; }

  /// Fires every event with fire_at <= horizon, then parks the clock at horizon.
  std::size_t run_until(SimTime horizon);

  /// Drains the queue; returns the fire time of the last event (now() if none).
  SimTime run_to_end();

  std::size_t pending() const { return queue_.size(); }
  std::uint64_t fired_count() const { return fired_; }

  void enable_trace(bool on) { tracing_ = on; }
  const std::vector<TraceRecord>& trace() const { return trace_; }
  /// Writes `fire_at_ns,sequence,event_kind` lines.
  void write_trace(std::ostream& out) const;

 private:
  struct Pending {
    std::string kind;
    Handler handler;
  };
  using Key = std::pair<std::int64_t, std::uint64_t>;

  void fire_next();

  std::map<Key, Pending> queue_;
  std::unordered_map<EventId, std::int64_t> fire_times_;
  SimTime now_{};
  std::uint64_t next_sequence_ = 0;
  std::uint64_t fired_ = 0;
  std::uint64_t event_cap_;
  bool tracing_ = false;
  std::vector<TraceRecord> trace_;
};

}  // namespace mst
