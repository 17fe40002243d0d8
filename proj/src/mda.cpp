#include "mst/mda.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "mst/error.hpp"

namespace mst {

namespace {

// Guards threshold comparisons against last-bit rounding in the ramp arithmetic.
constexpr double kCompareEps = 1e-9;

constexpr std::uint64_t kSoftFailStream = 0x50f7;

}  // namespace

DegradationDetector::DegradationDetector(DetectorConfig cfg, double fail_snr_db, std::uint64_t service_id)
    : cfg_(cfg), fail_snr_db_(fail_snr_db), service_id_(service_id) {
  if (cfg_.sample_period.count() <= 0 || cfg_.baseline_window <= 0 || cfg_.drop_threshold_db <= 0 ||
      cfg_.consecutive_required <= 0 || cfg_.regression_window <= 0)
    throw std::invalid_argument("detector parameters must be positive");
}

void DegradationDetector::ingest(const TelemetrySample& s) {
  if (!recent_.empty() && s.t < recent_.back().t) {
    throw Error(ErrorCode::OutOfOrderSample, "sample at " + std::to_string(to_ns(s.t)) +
                                                 " ns precedes previous at " +
                                                 std::to_string(to_ns(recent_.back().t)) + " ns");
  }
  recent_.push_back(s);
  while (recent_.size() > static_cast<std::size_t>(cfg_.regression_window)) recent_.pop_front();

  if (!baseline_ready()) {
    // Running mean: exact when every baseline sample is identical.
    ++count_;
    baseline_ += (s.snr_db - baseline_) / static_cast<double>(count_);
    if (baseline_ready()) since_onset_ = 1;
    fresh_ = false;
    return;
  }
  ++count_;
  if (s.snr_db >= baseline_) {
    since_onset_ = 1;
  } else {
    ++since_onset_;
  }
  if (baseline_ - s.snr_db > cfg_.drop_threshold_db + kCompareEps)
    ++low_run_;
  else
    low_run_ = 0;
  fresh_ = true;
}

double DegradationDetector::fitted_slope() const {
  std::size_t n = std::min({recent_.size(), since_onset_, static_cast<std::size_t>(cfg_.regression_window)});
  n = std::max<std::size_t>(std::min<std::size_t>(2, recent_.size()), n);
  if (n < 2) return 0.0;
  const auto first = recent_.end() - static_cast<std::ptrdiff_t>(n);
  const SimTime t0 = first->t;
  double mx = 0.0;
  double my = 0.0;
  for (auto it = first; it != recent_.end(); ++it) {
    mx += to_seconds(it->t - t0);
    my += it->snr_db;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  for (auto it = first; it != recent_.end(); ++it) {
    const double dx = to_seconds(it->t - t0) - mx;
    sxy += dx * (it->snr_db - my);
    sxx += dx * dx;
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

std::optional<DegradationEvent> DegradationDetector::detect() {
  if (fired_ || !fresh_ || !baseline_ready()) return std::nullopt;
  fresh_ = false;
  if (low_run_ < cfg_.consecutive_required) return std::nullopt;
  fired_ = true;

  const auto& s = recent_.back();
  DegradationEvent ev;
  ev.service_id = service_id_;
  ev.t_detect = s.t;
  ev.snr_at_detect_db = s.snr_db;
  ev.ber_at_detect = s.pre_fec_ber;
  ev.fitted_slope_db_per_s = fitted_slope();
  if (ev.fitted_slope_db_per_s < 0.0) {
    const double margin = std::max(0.0, s.snr_db - fail_snr_db_);
    ev.predicted_t_fail = s.t + from_seconds(margin / -ev.fitted_slope_db_per_s);
  }
  return ev;
}

void DegradationDetector::reset() {
  recent_.clear();
  count_ = 0;
  baseline_ = 0.0;
  low_run_ = 0;
  since_onset_ = 0;
  fresh_ = false;
  fired_ = false;
}

Duration anticipation_time(const DegradationEvent& ev, SimTime fail_crossing) {
  if (fail_crossing < ev.t_detect) {
    throw Error(ErrorCode::DetectionTooLate,
                "fail criterion crossed " + std::to_string(to_seconds(ev.t_detect - fail_crossing)) +
                    " s before detection");
  }
  return fail_crossing - ev.t_detect;
}

SoftFailRepetition run_softfail_repetition(const SoftFailCase& c, std::size_t case_index,
                                           const SoftFailSettings& settings, const SoftFailEnvironment& env,
                                           std::size_t repetition) {
  const CounterRng rng = CounterRng(env.seed).split(kSoftFailStream).split(case_index).split(repetition);
  Kernel kernel;
  kernel.enable_trace(env.capture_events);
  RingTopology topo = build_ring(env.topology);
  ControlPlane cp(topo, kernel, env.timing, rng.split(1));

  const ServiceRecord rec = deploy_service(cp, kernel, env.service);
  if (rec.status != ServiceStatus::Active) {
    throw Error(rec.failure.value_or(ErrorCode::IncompleteRecord), "service deployment failed");
  }
  const OpticalPath path = *rec.path;
  const SimTime monitoring_start = *rec.ts.monitoring_active;

  DetectorConfig dcfg = settings.detector;
  if (c.drop_threshold_db) dcfg.drop_threshold_db = *c.drop_threshold_db;
  const auto periods = std::llround(settings.ramp_start_offset_s / to_seconds(dcfg.sample_period));
  const SimTime ramp_start = monitoring_start + periods * dcfg.sample_period;

  PhysicalLayer phy(topo, kernel, settings.signal, dcfg.sample_period);
  const std::string link = settings.link.empty() ? topo.links.at(path.links.front()).id : settings.link;
  const RampHandle ramp = phy.apply_attenuation_ramp({link, c.rate_db_per_s, ramp_start, c.kappa});
  const auto crossing = phy.fail_crossing(path, ramp_start);
  if (!crossing) throw Error(ErrorCode::DetectionTooLate, "ramp never reaches the fail criterion on this path");

  struct Monitor {
    DegradationDetector detector;
    std::optional<DegradationEvent> alert;
    std::optional<RestorationOutcome> outcome;
    std::vector<TelemetrySample> trace;
    bool invariants_at_alert = false;
  };
  auto mon = std::make_shared<Monitor>(
      Monitor{DegradationDetector(dcfg, fail_snr_db(settings.signal), rec.request_id), {}, {}, {}, false});
  const CounterRng noise = rng.split(2);
  const SimTime give_up = ramp_start + from_seconds(settings.horizon_s);

  std::function<void(Kernel&)> sample = [&](Kernel& k) {
    const SimTime t = k.now();
    const auto s = phy.sample_telemetry(path, t, settings.noise_sigma_db, noise);
    mon->trace.push_back(s);
    mon->detector.ingest(s);
    if (auto ev = mon->detector.detect()) {
      mon->alert = ev;
      mon->invariants_at_alert = light_loop_free(topo) && channels_exclusive(cp);
      if (settings.restore) {
        cp.handle_degradation_alert(*ev, *crossing, [mon](const RestorationOutcome& o) { mon->outcome = o; });
      }
    }
    const bool restored = mon->outcome && mon->outcome->kind == RestorationOutcome::Kind::Restored;
    const bool done = (mon->alert && (t >= *crossing || restored)) || t >= give_up;
    if (done) {
      phy.remove_ramp(ramp);
      return;
    }
    k.schedule_in(dcfg.sample_period, "mda.sample", sample);
  };
  kernel.schedule(monitoring_start, "mda.sample", sample);
  kernel.run_to_end();

  if (!mon->alert) throw Error(ErrorCode::DetectionTooLate, "no degradation detected within the horizon");

  SoftFailRepetition out;
  out.detection_time = mon->alert->t_detect - ramp_start;
  out.anticipation = anticipation_time(*mon->alert, *crossing);
  if (mon->alert->predicted_t_fail) out.predicted_anticipation = *mon->alert->predicted_t_fail - mon->alert->t_detect;
  out.snr_at_detect_db = mon->alert->snr_at_detect_db;
  out.ber_at_detect = mon->alert->ber_at_detect;
  out.fitted_slope_db_per_s = mon->alert->fitted_slope_db_per_s;
  out.restoration = mon->outcome;
  out.invariants_at_alert = mon->invariants_at_alert;
  out.invariants_at_end = light_loop_free(topo) && channels_exclusive(cp);
  out.ramp_start = ramp_start;
  out.fail_crossing = *crossing;
  out.trace = std::move(mon->trace);
  if (env.capture_events) out.events = kernel.trace();
  return out;
}

SoftFailReport run_softfail_case(const SoftFailCase& c, std::size_t case_index, const SoftFailSettings& settings,
                                 const SoftFailEnvironment& env, Execution exec) {
  if (settings.repetitions <= 0) throw std::invalid_argument("repetitions must be positive");
  auto reps = map_repetitions(static_cast<std::size_t>(settings.repetitions), exec, [&](std::size_t r) {
    try {
      return run_softfail_repetition(c, case_index, settings, env, r);
    } catch (const Error& e) {
      throw Error(e.code(), "case " + std::to_string(case_index + 1) + " repetition " + std::to_string(r) + ": " +
                                e.what());
    }
  });

  SoftFailReport report;
  report.config = c;
  const double n = static_cast<double>(reps.size());
  double det = 0.0, ant = 0.0, pred = 0.0, snr = 0.0, ber = 0.0;
  for (const auto& r : reps) {
    det += static_cast<double>(r.detection_time.count());
    ant += static_cast<double>(r.anticipation.count());
    pred += static_cast<double>(r.predicted_anticipation.count());
    snr += r.snr_at_detect_db;
    ber += r.ber_at_detect;
    if (r.restoration) {
      if (r.restoration->kind == RestorationOutcome::Kind::Restored)
        ++report.restored;
      else
        ++report.restoration_failed;
    }
  }
  report.detection_time = Duration{std::llround(det / n)};
  report.anticipation = Duration{std::llround(ant / n)};
  report.predicted_anticipation = Duration{std::llround(pred / n)};
  report.mean_detection_snr_db = snr / n;
  report.mean_detection_ber = ber / n;
  report.trace = reps.front().trace;
  report.trace_ramp_start = reps.front().ramp_start;
  for (auto& r : reps) r.trace.clear();
  report.repetitions = std::move(reps);
  return report;
}

}  // namespace mst
