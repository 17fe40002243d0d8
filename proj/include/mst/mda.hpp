#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "mst/alerts.hpp"
#include "mst/controlplane.hpp"
#include "mst/optics.hpp"
#include "mst/parallel.hpp"
#include "mst/topology.hpp"

namespace mst {

struct DetectorConfig {
  Duration sample_period = from_seconds(1.0);
  int baseline_window = 60;
  double drop_threshold_db = 0.5;
  int consecutive_required = 3;
  int regression_window = 30;

  bool operator==(const DetectorConfig&) const = default;
};

/// Baseline-drop detector with K-consecutive confirmation and least-squares
/// extrapolation to the fail threshold.
///
/// The first `baseline_window` samples fix the baseline. Afterwards a sample is
/// "low" when it sits more than `drop_threshold_db` below the baseline, and the
/// detector fires on the sample that completes a run of `consecutive_required`
/// low samples. The slope is fitted over the most recent samples since the SNR
/// last stood at or above the baseline, capped at `regression_window`. One
/// alert per episode; `reset()` starts a new one.
class DegradationDetector {
 public:
  DegradationDetector(DetectorConfig cfg, double fail_snr_db, std::uint64_t service_id = 0);

  /// Throws Error(OutOfOrderSample) if s.t precedes the previous sample.
  void ingest(const TelemetrySample& s);

  /// Alert for the latest sample, at most once per episode.
  std::optional<DegradationEvent> detect();

  void reset();

  bool baseline_ready() const { return count_ >= static_cast<std::size_t>(cfg_.baseline_window); }
  double baseline_db() const { return baseline_; }
  std::size_t samples_seen() const { return count_; }
  bool fired() const { return fired_; }

 private:
  double fitted_slope() const;

  DetectorConfig cfg_;
  double fail_snr_db_;
  std::uint64_t service_id_;

  std::deque<TelemetrySample> recent_;
  std::size_t count_ = 0;
  double baseline_ = 0.0;
  int low_run_ = 0;
  std::size_t since_onset_ = 0;
  bool fresh_ = false;
  bool fired_ = false;
};

/// Fail crossing minus detection; Error(DetectionTooLate) if negative.
Duration anticipation_time(const DegradationEvent& ev, SimTime fail_crossing);

// ---------------------------------------------------------------------------
// Soft-failure experiment

struct SoftFailCase {
  double rate_db_per_s = 0.025;
  double kappa = 1.0;
  std::optional<double> drop_threshold_db;  // overrides the detector default

  bool operator==(const SoftFailCase&) const = default;
};

struct SoftFailSettings {
  std::vector<SoftFailCase> cases;
  int repetitions = 1;
  double noise_sigma_db = 0.0;
  double ramp_start_offset_s = 120.0;  // after monitoring starts; whole sample periods
  double horizon_s = 3600.0;           // give up this long after the ramp starts
  bool restore = true;
  std::string link;                    // empty: first link of the service path
  DetectorConfig detector;
  SignalModel signal;

  bool operator==(const SoftFailSettings&) const = default;
};

/// Everything a repetition needs to rebuild its own plant and control plane.
struct SoftFailEnvironment {
  TopologySpec topology;
  NsDescriptor service;
  ControlTiming timing;
  std::uint64_t seed = 0;
  bool capture_events = false;
};

struct SoftFailRepetition {
  Duration detection_time{0};
  Duration anticipation{0};
  Duration predicted_anticipation{0};
  double snr_at_detect_db = 0.0;
  double ber_at_detect = 0.0;
  double fitted_slope_db_per_s = 0.0;
  std::optional<RestorationOutcome> restoration;
  /// No-light-loop and channel exclusivity, checked when the alert is raised
  /// and again once the run has settled.
  bool invariants_at_alert = false;
  bool invariants_at_end = false;
  SimTime ramp_start;
  SimTime fail_crossing;
  std::vector<TelemetrySample> trace;
  std::vector<TraceRecord> events;
};

struct SoftFailReport {
  SoftFailCase config;
  Duration detection_time{0};
  Duration anticipation{0};
  Duration predicted_anticipation{0};
  double mean_detection_snr_db = 0.0;
  double mean_detection_ber = 0.0;
  int restored = 0;
  int restoration_failed = 0;
  std::vector<SoftFailRepetition> repetitions;
  /// Telemetry of repetition 0 and the instant its ramp started.
  std::vector<TelemetrySample> trace;
  SimTime trace_ramp_start;
};

/// One repetition: deploy the service, let the detector learn the baseline,
/// start the ramp, stream telemetry until detection and the fail crossing (or
/// restoration), and account detection and anticipation times.
SoftFailRepetition run_softfail_repetition(const SoftFailCase& c, std::size_t case_index,
                                           const SoftFailSettings& settings, const SoftFailEnvironment& env,
                                           std::size_t repetition);

SoftFailReport run_softfail_case(const SoftFailCase& c, std::size_t case_index, const SoftFailSettings& settings,
                                 const SoftFailEnvironment& env, Execution exec = Execution::Serial);

}  // namespace mst
