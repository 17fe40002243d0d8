#include "mst/simkernel.hpp"

#include <ostream>

#include "mst/error.hpp"

namespace mst {

EventId Kernel::schedule(SimTime at, std::string_view kind, Handler handler) {
  if (at < now_) {
    throw Error(ErrorCode::SchedulingInPast,
                "event '" + std::string(kind) + "' at " + std::to_string(to_ns(at)) +
                    " ns is before now=" + std::to_string(to_ns(now_)) + " ns");
  }
  const EventId id = next_sequence_++;
  queue_.emplace(Key{to_ns(at), id}, Pending{std::string(kind), std::move(handler)});
  fire_times_.emplace(id, to_ns(at));
  return id;
}

bool Kernel::cancel(EventId id) {
  auto it = fire_times_.find(id);
  if (it == fire_times_.end()) return false;
  queue_.erase(Key{it->second, id});
  fire_times_.erase(it);
  return true;
}

void Kernel::fire_next() {
  if (fired_ >= event_cap_) {
    throw Error(ErrorCode::RunawaySimulation,
                "fired-event cap of " + std::to_string(event_cap_) + " reached");
  }
  auto node = queue_.extract(queue_.begin());
  const auto [fire_at, sequence] = node.key();
  fire_times_.erase(sequence);
  now_ = SimTime{Duration{fire_at}};
  ++fired_;
  if (tracing_) trace_.push_back({fire_at, sequence, node.mapped().kind});
  if (node.mapped().handler) node.mapped().handler(*this);
}

std::size_t Kernel::run_until(SimTime horizon) {
  if (horizon < now_) {
    throw Error(ErrorCode::SchedulingInPast, "run_until horizon precedes now()");
  }
  std::size_t count = 0;
  while (!queue_.empty() && queue_.begin()->first.first <= to_ns(horizon)) {
    fire_next();
    ++count;
  }
  now_ = horizon;
  return count;
}

SimTime Kernel::run_to_end() {
  while (!queue_.empty()) fire_next();
  return now_;
}

void Kernel::write_trace(std::ostream& out) const {
  for (const auto& r : trace_) out << r.fire_at_ns << ',' << r.sequence << ',' << r.kind << '\n';
}

}  // namespace mst
