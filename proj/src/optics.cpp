#include "mst/optics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mst/error.hpp"

namespace mst {

Duration rt_propagation_delay(double length_m, double group_index) {
  const double seconds = 2.0 * length_m * group_index / PhysicalConstants::c_m_per_s;
  return Duration{static_cast<std::int64_t>(std::llround(seconds * 1e9))};
}

LifecycleDurations sample_lifecycle(const TransponderNode& tp, double cv, CounterRng& rng) {
  if (cv <= 0.0) return {tp.config_duration, tp.warmup_duration};
  auto draw = [&](Duration nominal) {
    if (nominal.count() == 0) return nominal;
    return from_seconds(rng.lognormal(to_seconds(nominal), cv));
  };
  const Duration config = draw(tp.config_duration);
  return {config, draw(tp.warmup_duration)};
}

LifecycleSchedule transponder_lifecycle(Kernel& kernel, TransponderNode& tp, SimTime configure_at,
                                        LifecycleDurations durations,
                                        std::function<void(SimTime)> on_operational) {
  if (tp.state != TransponderState::Off || tp.lifecycle_pending) {
    throw Error(ErrorCode::IllegalTransition, "transponder " + tp.id.name + " is not Off");
  }
  tp.lifecycle_pending = true;
  LifecycleSchedule s{configure_at, configure_at + durations.config,
                      configure_at + durations.config + durations.warmup};
  TransponderNode* node = &tp;
  kernel.schedule(s.configuring_at, "tp.configuring", [node](Kernel&) {
    node->lifecycle_pending = false;
    node->transition(TransponderState::Configuring);
  });
  kernel.schedule(s.warmup_at, "tp.laser_warmup",
                  [node](Kernel&) { node->transition(TransponderState::LaserWarmup); });
  kernel.schedule(s.operational_at, "tp.operational", [node, cb = std::move(on_operational)](Kernel& k) {
    node->transition(TransponderState::Operational);
    if (cb) cb(k.now());
  });
  return s;
}

double ber_from_snr(double snr_db, const SignalModel& model) {
  const double snr_lin = std::pow(10.0, (snr_db - model.implementation_penalty_db) / 10.0);
  const double ber = 0.5 * std::erfc(std::sqrt(snr_lin / 2.0));
  return std::clamp(ber, kBerFloor, 0.5);
}

double fail_snr_db(const SignalModel& model) {
  if (model.fail.kind == FailCriterion::Kind::SnrBelowDb) return model.fail.value;
  // ber_from_snr is strictly decreasing on this bracket.
  double lo = -30.0;
  double hi = 40.0;
  for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (ber_from_snr(mid, model) > model.fail.value)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

PhysicalLayer::PhysicalLayer(RingTopology& topo, Kernel& kernel, SignalModel model, Duration update_period)
    : topo_(topo), kernel_(kernel), model_(model), update_period_(update_period) {
  if (update_period_.count() <= 0) throw std::invalid_argument("update period must be positive");
}

RampHandle PhysicalLayer::apply_attenuation_ramp(const AttenuationRamp& ramp) {
  if (!(ramp.rate_db_per_s > 0.0)) throw std::invalid_argument("ramp rate must be positive");
  if (!(ramp.snr_coupling > 0.0 && ramp.snr_coupling <= 1.5))
    throw std::invalid_argument("SNR coupling must lie in (0, 1.5]");
  const std::size_t link = topo_.link_index(ramp.link_id);
  for (const auto& r : ramps_) {
    if (r.active && r.link == link)
      throw Error(ErrorCode::RampConflict, "link " + ramp.link_id + " already has an active ramp");
  }
  const RampHandle handle = ramps_.size();
  ramps_.push_back(ActiveRamp{ramp, link});
  schedule_update(handle, std::max(ramp.start_time, kernel_.now()));
  return handle;
}

void PhysicalLayer::schedule_update(RampHandle handle, SimTime at) {
  ramps_[handle].next_update = kernel_.schedule(at, "optics.ramp_update", [this, handle](Kernel& k) {
    auto& r = ramps_[handle];
    if (!r.active) return;
    topo_.links[r.link].added_attenuation_db = added_attenuation_db(r.link, k.now());
    schedule_update(handle, k.now() + update_period_);
  });
}

void PhysicalLayer::remove_ramp(RampHandle handle) {
  auto& r = ramps_.at(handle);
  if (!r.active) return;
  r.active = false;
  kernel_.cancel(r.next_update);
  topo_.links[r.link].added_attenuation_db = 0.0;
}

double PhysicalLayer::added_attenuation_db(std::size_t link, SimTime t) const {
  double total = 0.0;
  for (const auto& r : ramps_) {
    if (!r.active || r.link != link || t <= r.ramp.start_time) continue;
    total += r.ramp.rate_db_per_s * to_seconds(t - r.ramp.start_time);
  }
  return total;
}

void PhysicalLayer::require_operational(const OpticalPath& path) const {
  if (!path.channel) throw Error(ErrorCode::PathNotOperational, "path has no channel assigned");
  for (const auto* end : {&path.source, &path.destination}) {
    if (topo_.transponder(*end).state != TransponderState::Operational)
      throw Error(ErrorCode::PathNotOperational, "transponder " + end->name + " is not Operational");
  }
}

double PhysicalLayer::snr_at_receiver(const OpticalPath& path, SimTime t) const {
  require_operational(path);
  double snr = model_.snr0_db;
  for (const auto& r : ramps_) {
    if (!r.active || std::find(path.links.begin(), path.links.end(), r.link) == path.links.end()) continue;
    if (t > r.ramp.start_time)
      snr -= r.ramp.snr_coupling * r.ramp.rate_db_per_s * to_seconds(t - r.ramp.start_time);
  }
  return std::max(snr, kSnrFloorDb);
}

TelemetrySample PhysicalLayer::sample_telemetry(const OpticalPath& path, SimTime t, double noise_sigma_db,
                                                const CounterRng& noise_stream) const {
  double snr = snr_at_receiver(path, t);
  if (noise_sigma_db > 0.0) {
    CounterRng draw = noise_stream.split(static_cast<std::uint64_t>(to_ns(t)));
    snr = std::max(draw.normal(snr, noise_sigma_db), kSnrFloorDb);
  }
  return TelemetrySample{t, snr, ber_from_snr(snr, model_), snr <= kSnrFloorDb};
}

std::optional<SimTime> PhysicalLayer::fail_crossing(const OpticalPath& path, SimTime from) const {
  const double threshold = fail_snr_db(model_);
  struct Piece {
    SimTime start;
    double slope;  // dB/s
  };
  std::vector<Piece> pieces;
  for (const auto& r : ramps_) {
    if (!r.active || std::find(path.links.begin(), path.links.end(), r.link) == path.links.end()) continue;
    pieces.push_back({r.ramp.start_time, r.ramp.snr_coupling * r.ramp.rate_db_per_s});
  }
  std::sort(pieces.begin(), pieces.end(), [](const Piece& a, const Piece& b) { return a.start < b.start; });

  auto snr_at = [&](SimTime t) {
    double snr = model_.snr0_db;
    for (const auto& p : pieces)
      if (t > p.start) snr -= p.slope * to_seconds(t - p.start);
    return snr;
  };

  SimTime cursor = from;
  double snr = snr_at(cursor);
  if (snr <= threshold) return cursor;
  double slope = 0.0;
  for (const auto& p : pieces)
    if (p.start <= cursor) slope += p.slope;
  for (const auto& p : pieces) {
    if (p.start <= cursor) continue;
    const double span = to_seconds(p.start - cursor);
    if (slope > 0.0 && snr - slope * span <= threshold) break;
    snr -= slope * span;
    cursor = p.start;
    slope += p.slope;
  }
  if (slope <= 0.0) return std::nullopt;
  return cursor + from_seconds((snr - threshold) / slope);
}

}  // namespace mst
