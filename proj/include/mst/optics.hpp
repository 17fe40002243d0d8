#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>

#include "mst/rng.hpp"
#include "mst/simkernel.hpp"
#include "mst/topology.hpp"

namespace mst {

struct PhysicalConstants {
  static constexpr double c_m_per_s = 299'792'458.0;
  double default_group_index = kDefaultGroupIndex;
};

/// Round trip 2 * L * n_g / c, rounded to the nearest nanosecond.
Duration rt_propagation_delay(double length_m, double group_index = kDefaultGroupIndex);

// ---------------------------------------------------------------------------
// Transponder lifecycle

struct LifecycleDurations {
  Duration config;
  Duration warmup;
};

/// Draws configuration and warm-up durations around the node's nominal values.
/// cv <= 0 reproduces the nominal values exactly.
LifecycleDurations sample_lifecycle(const TransponderNode& tp, double cv, CounterRng& rng);

struct LifecycleSchedule {
  SimTime configuring_at;
  SimTime warmup_at;
  SimTime operational_at;
};

/// Schedules Configuring / LaserWarmup / Operational transitions. The node must
/// be Off with no lifecycle already pending (Error(IllegalTransition) otherwise)
/// and must outlive the scheduled events.
LifecycleSchedule transponder_lifecycle(Kernel& kernel, TransponderNode& tp, SimTime configure_at,
                                        LifecycleDurations durations,
                                        std::function<void(SimTime)> on_operational = {});

// ---------------------------------------------------------------------------
// Signal quality

struct FailCriterion {
  enum class Kind { SnrBelowDb, BerAbove };
  Kind kind = Kind::BerAbove;
  double value = 3.8e-3;

  bool operator==(const FailCriterion&) const = default;
};

struct SignalModel {
  double snr0_db = 21.84;
  double implementation_penalty_db = 0.25;
  FailCriterion fail;

  bool operator==(const SignalModel&) const = default;
};

inline constexpr double kSnrFloorDb = -10.0;
inline constexpr double kBerFloor = 1e-300;

/// Per-bit QPSK error probability 0.5 * erfc(sqrt(snr_lin / 2)) after removing the
/// implementation penalty, clamped to [1e-300, 0.5].
double ber_from_snr(double snr_db, const SignalModel& model);

/// SNR at which the model's fail criterion is met exactly.
double fail_snr_db(const SignalModel& model);

struct TelemetrySample {
  SimTime t;
  double snr_db = 0.0;
  double pre_fec_ber = 0.0;
  bool loss_of_signal = false;
};

struct AttenuationRamp {
  std::string link_id;
  double rate_db_per_s = 0.0;
  SimTime start_time;
  double snr_coupling = 1.0;
};

using RampHandle = std::size_t;

/// Time-varying state of the optical plant for one run: attenuation ramps on
/// links and the receiver SNR/BER they imply. Mutated only from kernel events.
class PhysicalLayer {
 public:
  PhysicalLayer(RingTopology& topo, Kernel& kernel, SignalModel model,
                Duration update_period = from_seconds(1.0));

  const SignalModel& model() const { return model_; }

  /// Throws Error(RampConflict) if the link already has a ramp, Error(TopologyInvalid)
  /// for an unknown link, and std::invalid_argument for a non-positive rate or a
  /// coupling outside (0, 1.5].
  RampHandle apply_attenuation_ramp(const AttenuationRamp& ramp);

  /// Stops the ramp's update events and clears the link's added attenuation.
  void remove_ramp(RampHandle handle);

  double added_attenuation_db(std::size_t link, SimTime t) const;

  /// Model SNR at the path's receiver, clamped at -10 dB. Throws
  /// Error(PathNotOperational) unless the path has a channel and both
  /// transponders are Operational.
  double snr_at_receiver(const OpticalPath& path, SimTime t) const;

  /// Noisy telemetry sample. The noise draw is keyed by (stream, t), so a
  /// repeated query at the same instant returns the same sample.
  TelemetrySample sample_telemetry(const OpticalPath& path, SimTime t, double noise_sigma_db,
                                   const CounterRng& noise_stream) const;

  /// Earliest instant >= from at which the noise-free SNR meets the fail
  /// criterion, given the ramps currently applied; nullopt if it never does.
  std::optional<SimTime> fail_crossing(const OpticalPath& path, SimTime from) const;

 private:
  struct ActiveRamp {
    AttenuationRamp ramp;
    std::size_t link;
    EventId next_update = 0;
    bool active = true;
  };

  void schedule_update(RampHandle handle, SimTime at);
  void require_operational(const OpticalPath& path) const;

  RingTopology& topo_;
  Kernel& kernel_;
  SignalModel model_;
  Duration update_period_;
  std::vector<ActiveRamp> ramps_;
};

}  // namespace mst
