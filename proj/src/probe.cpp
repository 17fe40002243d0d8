#include "mst/probe.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numeric>

#include "mst/error.hpp"
#include "mst/optics.hpp"

namespace mst {

namespace {

std::int64_t jitter_ns(const ProbeConfig& cfg, CounterRng& rng) {
  if (cfg.jitter_sigma_ns <= 0) return 0;
  return std::llround(rng.normal(0.0, static_cast<double>(cfg.jitter_sigma_ns)));
}

LatencyMeasurement finish(double length_m, std::int64_t measured, std::int64_t estimated) {
  LatencyMeasurement m{length_m, measured, estimated, 0};
  m.delta_ns = compute_delta(m);
  return m;
}

}  // namespace

std::int64_t switch_overhead_from_topology(const OpticalPath& path, const RingTopology& topo) {
  std::int64_t total = 0;
  for (const auto* end : {&path.source, &path.destination})
    total += topo.aggregation_switch(topo.transponder(*end).attached_switch).per_pass_latency_ns;
  return total;
}

Duration estimate_rt_propagation(double length_m, double group_index) {
  return rt_propagation_delay(length_m, group_index);
}

std::int64_t compute_delta(const LatencyMeasurement& m) { return m.measured_rt_ns - m.estimated_rt_prop_ns; }

LatencyMeasurement measure_round_trip(const OpticalPath& path, const RingTopology& topo, const ProbeConfig& cfg,
                                      CounterRng& rng) {
  if (!path.channel) throw Error(ErrorCode::PathNotOperational, "path has no channel assigned");
  for (const auto* end : {&path.source, &path.destination}) {
    if (topo.transponder(*end).state != TransponderState::Operational)
      throw Error(ErrorCode::PathNotOperational, "transponder " + end->name + " is not Operational");
  }
  double length = 0.0;
  std::int64_t propagation = 0;
  std::int64_t residual = 0;
  for (std::size_t idx : path.links) {
    const auto& link = topo.links.at(idx);
    length += link.length_m;
    propagation += rt_propagation_delay(link.length_m, link.group_index).count();
    residual += link.legacy_residual_delay_ns;
  }
  const std::int64_t measured = propagation + residual + cfg.total_overhead_ns() + jitter_ns(cfg, rng);
  return finish(length, measured, propagation);
}

double BudgetReport::total_ns() const { return std::accumulate(fitted_ns.begin(), fitted_ns.end(), 0.0); }

BudgetReport fit_budget(std::span<const double> deltas_ns, const Attribution& attribution) {
  const auto rows = static_cast<Eigen::Index>(attribution.rows.size());
  const auto cols = static_cast<Eigen::Index>(attribution.components.size());
  if (rows != static_cast<Eigen::Index>(deltas_ns.size()))
    throw std::invalid_argument("attribution rows must match the number of deltas");
  if (cols == 0 || rows < cols)
    throw Error(ErrorCode::Underdetermined,
                std::to_string(rows) + " measurements for " + std::to_string(cols) + " components");

  Eigen::MatrixXd a(rows, cols);
  Eigen::VectorXd b(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = attribution.rows[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != cols) throw std::invalid_argument("ragged attribution matrix");
    for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = row[static_cast<std::size_t>(j)];
    b(i) = deltas_ns[static_cast<std::size_t>(i)];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < cols) throw Error(ErrorCode::RankDeficient, "attribution columns are linearly dependent");

  const Eigen::VectorXd x = qr.solve(b);
  const Eigen::VectorXd r = a * x - b;

  BudgetReport report;
  report.components = attribution.components;
  report.fitted_ns.assign(x.data(), x.data() + x.size());
  report.residual_rms_ns = std::sqrt(r.squaredNorm() / static_cast<double>(rows));
  return report;
}

BudgetReport fit_budget(std::span<const LatencyMeasurement> measurements, const Attribution& attribution) {
  std::vector<double> deltas;
  deltas.reserve(measurements.size());
  for (const auto& m : measurements) deltas.push_back(static_cast<double>(m.delta_ns));
  return fit_budget(deltas, attribution);
}

Calibration run_calibration(const ProbeConfig& cfg, double fiber_length_m, double group_index, CounterRng& rng) {
  const std::int64_t prop = rt_propagation_delay(fiber_length_m, group_index).count();
  Calibration cal;
  cal.attribution.components = {"probe", "aggregation_switches", "optical_devices"};
  cal.attribution.rows = {{1, 0, 0}, {1, 1, 0}, {1, 1, 1}};
  cal.measurements.push_back(finish(0.0, cfg.probe_overhead_ns + jitter_ns(cfg, rng), 0));
  cal.measurements.push_back(
      finish(0.0, cfg.probe_overhead_ns + cfg.switch_overhead_ns + jitter_ns(cfg, rng), 0));
  cal.measurements.push_back(finish(fiber_length_m, prop + cfg.total_overhead_ns() + jitter_ns(cfg, rng), prop));
  return cal;
}

}  // namespace mst
