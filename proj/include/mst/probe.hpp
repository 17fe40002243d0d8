#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mst/rng.hpp"
#include "mst/time.hpp"
#include "mst/topology.hpp"

namespace mst {

struct ProbeConfig {
  std::int64_t probe_overhead_ns = 840;
  std::int64_t switch_overhead_ns = 1290;  // both aggregation switches, round trip
  std::int64_t optical_device_overhead_ns = 13100;
  std::int64_t jitter_sigma_ns = 0;

  std::int64_t total_overhead_ns() const {
    return probe_overhead_ns + switch_overhead_ns + optical_device_overhead_ns;
  }

  bool operator==(const ProbeConfig&) const = default;
};

/// Switch overhead implied by the topology: the per-pass latency of the
/// aggregation switch at each end of the path.
std::int64_t switch_overhead_from_topology(const OpticalPath& path, const RingTopology& topo);

struct LatencyMeasurement {
  double link_length_m = 0.0;
  std::int64_t measured_rt_ns = 0;
  std::int64_t estimated_rt_prop_ns = 0;
  std::int64_t delta_ns = 0;

  bool operator==(const LatencyMeasurement&) const = default;
};

/// Alias of rt_propagation_delay, kept for report symmetry.
Duration estimate_rt_propagation(double length_m, double group_index = kDefaultGroupIndex);

std::int64_t compute_delta(const LatencyMeasurement& m);

/// Active-probe round trip over an operational path: per-link propagation,
/// legacy residual delays, fixed device overheads and optional Gaussian jitter.
/// Throws Error(PathNotOperational) unless the path has a channel and both
/// transponders are Operational.
LatencyMeasurement measure_round_trip(const OpticalPath& path, const RingTopology& topo, const ProbeConfig& cfg,
                                      CounterRng& rng);

/// Row-major attribution matrix: rows are measurements, columns budget components.
struct Attribution {
  std::vector<std::string> components;
  std::vector<std::vector<double>> rows;
};

struct BudgetReport {
  std::vector<std::string> components;
  std::vector<double> fitted_ns;
  double residual_rms_ns = 0.0;

  double total_ns() const;
};

/// Least-squares solution of attribution * x = deltas. Throws
/// Error(Underdetermined) with fewer rows than columns and Error(RankDeficient)
/// when the columns are linearly dependent.
BudgetReport fit_budget(std::span<const double> deltas_ns, const Attribution& attribution);
BudgetReport fit_budget(std::span<const LatencyMeasurement> measurements, const Attribution& attribution);

/// Calibration sweep that separates the three overheads: probe in loopback,
/// probe through both switches back to back, and the full chain over a short
/// fiber. Attribution is lower triangular in (probe, switches, optical devices).
struct Calibration {
  std::vector<LatencyMeasurement> measurements;
  Attribution attribution;
};

Calibration run_calibration(const ProbeConfig& cfg, double fiber_length_m, double group_index, CounterRng& rng);

}  // namespace mst
