#include "mst/report.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <json.hpp>
#include <sstream>

#include "mst/error.hpp"

namespace mst {

using nlohmann::json;

ReportFormat parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::Json;
  if (name == "csv") return ReportFormat::Csv;
  if (name == "table") return ReportFormat::Table;
  throw Error(ErrorCode::ValidationError, "format: expected json, csv or table");
}

std::string fixed(double value, int decimals) {
  if (value == 0.0) value = 0.0;  // no "-0.000"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string s = buf;
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
  return s;
}

std::string scientific(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*e", digits, value);
  return buf;
}

namespace {

std::string split_decimal(std::int64_t value, std::int64_t scale, int width) {
  const bool neg = value < 0;
  const std::uint64_t mag = neg ? static_cast<std::uint64_t>(-(value + 1)) + 1 : static_cast<std::uint64_t>(value);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%" PRIu64 ".%0*" PRIu64, neg ? "-" : "", mag / static_cast<std::uint64_t>(scale),
                width, mag % static_cast<std::uint64_t>(scale));
  return buf;
}

}  // namespace

std::string ns_as_seconds(Duration d) { return split_decimal(d.count(), 1'000'000'000, 9); }

std::string ns_as_us(std::int64_t ns) { return split_decimal(ns, 1000, 3); }

std::string km_label(double length_m) {
  std::string s = fixed(length_m / 1000.0, 4);
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return s;
}

namespace {

KpiStats stats(const std::vector<double>& xs) {
  KpiStats s;
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean_s = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean_s) * (x - s.mean_s);
  s.std_s = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
  s.min_s = *std::min_element(xs.begin(), xs.end());
  s.max_s = *std::max_element(xs.begin(), xs.end());
  return s;
}

std::string num(std::int64_t v) { return std::to_string(v); }
std::string num(std::uint64_t v) { return std::to_string(v); }

std::string opt_seconds(const std::optional<SimTime>& t) {
  return t ? ns_as_seconds(t->time_since_epoch()) : std::string("none");
}

json stats_json(const KpiStats& s) {
  return {{"mean_s", fixed(s.mean_s, 6)}, {"std_s", fixed(s.std_s, 6)}, {"min_s", fixed(s.min_s, 6)},
          {"max_s", fixed(s.max_s, 6)}};
}

std::string path_label(const OpticalPath& p, const RingTopology* topo) {
  std::string s;
  for (std::size_t i = 0; i < p.roadms.size(); ++i) {
    if (i) s += ">";
    s += topo ? topo->roadms[p.roadms[i]].id.name : std::to_string(p.roadms[i]);
  }
  return s;
}

json setup_json(const SetupPayload& p) {
  json runs = json::array();
  for (std::size_t i = 0; i < p.runs.size(); ++i) {
    const auto& r = p.runs[i];
    const auto& ts = r.record.ts;
    json stamps{{"request_s", opt_seconds(ts.request)},
                {"vnfs_started_s", opt_seconds(ts.vnfs_started)},
                {"vnfs_ready_s", opt_seconds(ts.vnfs_ready)},
                {"conn_requested_s", opt_seconds(ts.conn_requested)},
                {"roadms_configured_s", opt_seconds(ts.roadms_configured)},
                {"transponders_configured_s", opt_seconds(ts.transponders_configured)},
                {"path_operational_s", opt_seconds(ts.path_operational)},
                {"probe_verified_s", opt_seconds(ts.probe_verified)},
                {"monitoring_active_s", opt_seconds(ts.monitoring_active)}};
    json run{{"repetition", num(static_cast<std::uint64_t>(i))},
             {"status", std::string(to_string(r.record.status))},
             {"timestamps", stamps},
             {"kpi_ns_deploy_s", ns_as_seconds(r.kpis.ns_deploy)},
             {"kpi_connectivity_s", ns_as_seconds(r.kpis.connectivity)},
             {"kpi_e2e_s", ns_as_seconds(r.kpis.e2e)},
             {"kpi_e2e_excl_transponder_s", ns_as_seconds(r.kpis.e2e_excl_transponder)},
             {"transponder_phase_s", ns_as_seconds(r.record.transponder_phase)}};
    if (r.record.path) {
      run["path_roadms"] = path_label(*r.record.path, nullptr);
      if (r.record.path->channel) run["channel"] = num(static_cast<std::int64_t>(r.record.path->channel->index));
    }
    runs.push_back(run);
  }
  const auto s = summarize(p);
  json summary{{"kpi_ns_deploy", stats_json(s.ns_deploy)},
               {"kpi_connectivity", stats_json(s.connectivity)},
               {"kpi_e2e", stats_json(s.e2e)},
               {"kpi_e2e_excl_transponder", stats_json(s.e2e_excl_transponder)},
               {"transponder_phase", stats_json(s.transponder_phase)}};
  return {{"repetitions", num(static_cast<std::uint64_t>(p.runs.size()))}, {"runs", runs}, {"summary", summary}};
}

json measurement_json(const LatencyMeasurement& m) {
  return {{"link_length_km", km_label(m.link_length_m)},
          {"link_length_m", fixed(m.link_length_m, 4)},
          {"measured_us", ns_as_us(m.measured_rt_ns)},
          {"estimated_us", ns_as_us(m.estimated_rt_prop_ns)},
          {"delta_us", ns_as_us(m.delta_ns)},
          {"measured_rt_ns", num(m.measured_rt_ns)},
          {"estimated_rt_prop_ns", num(m.estimated_rt_prop_ns)},
          {"delta_ns", num(m.delta_ns)}};
}

json latency_json(const LatencyPayload& p) {
  json rows = json::array();
  for (const auto& m : p.rows) rows.push_back(measurement_json(m));
  json cal = json::array();
  for (const auto& m : p.calibration.measurements) cal.push_back(measurement_json(m));
  json comps = json::object();
  for (std::size_t i = 0; i < p.budget.components.size(); ++i)
    comps[p.budget.components[i]] = fixed(p.budget.fitted_ns[i] / 1000.0, 6);
  json budget{{"components_us", comps},
              {"total_us", fixed(p.budget.total_ns() / 1000.0, 6)},
              {"residual_rms_ns", fixed(p.budget.residual_rms_ns, 6)}};
  return {{"rows", rows}, {"calibration", cal}, {"budget", budget}};
}

double minutes(Duration d) { return to_seconds(d) / 60.0; }

json softfail_json(const SoftFailReport& r, std::size_t index) {
  json reps = json::array();
  for (std::size_t i = 0; i < r.repetitions.size(); ++i) {
    const auto& x = r.repetitions[i];
    json rep{{"repetition", num(static_cast<std::uint64_t>(i))},
             {"detection_time_s", ns_as_seconds(x.detection_time)},
             {"anticipation_time_s", ns_as_seconds(x.anticipation)},
             {"predicted_anticipation_s", ns_as_seconds(x.predicted_anticipation)},
             {"snr_at_detect_db", fixed(x.snr_at_detect_db, 6)},
             {"ber_at_detect", scientific(x.ber_at_detect, 6)},
             {"fitted_slope_db_per_s", fixed(x.fitted_slope_db_per_s, 9)},
             {"ramp_start_s", ns_as_seconds(x.ramp_start.time_since_epoch())},
             {"fail_crossing_s", ns_as_seconds(x.fail_crossing.time_since_epoch())},
             {"invariants_at_alert", x.invariants_at_alert},
             {"invariants_at_end", x.invariants_at_end}};
    if (x.restoration) {
      rep["restoration"] = x.restoration->kind == RestorationOutcome::Kind::Restored ? "restored" : "failed";
      rep["restoration_at_s"] = ns_as_seconds(x.restoration->at.time_since_epoch());
      if (x.restoration->reason) rep["restoration_reason"] = std::string(to_string(*x.restoration->reason));
    } else {
      rep["restoration"] = "none";
    }
    reps.push_back(rep);
  }
  json cfg{{"rate_db_per_s", fixed(r.config.rate_db_per_s, 6)}, {"kappa", fixed(r.config.kappa, 6)}};
  if (r.config.drop_threshold_db) cfg["drop_threshold_db"] = fixed(*r.config.drop_threshold_db, 6);
  return {{"case", "Case " + std::to_string(index + 1)},
          {"config", cfg},
          {"detection_time_s", ns_as_seconds(r.detection_time)},
          {"detection_time_min", fixed(minutes(r.detection_time), 4)},
          {"anticipation_time_s", ns_as_seconds(r.anticipation)},
          {"anticipation_time_min", fixed(minutes(r.anticipation), 4)},
          {"predicted_anticipation_s", ns_as_seconds(r.predicted_anticipation)},
          {"mean_detection_snr_db", fixed(r.mean_detection_snr_db, 6)},
          {"mean_detection_ber", scientific(r.mean_detection_ber, 6)},
          {"restored", num(static_cast<std::int64_t>(r.restored))},
          {"restoration_failed", num(static_cast<std::int64_t>(r.restoration_failed))},
          {"trace_samples", num(static_cast<std::uint64_t>(r.trace.size()))},
          {"repetitions", reps}};
}

// Number leaves of the echoed configuration become decimal strings too.
json canonical_numbers(const json& j) {
  if (j.is_object()) {
    json out = json::object();
    for (const auto& [k, v] : j.items()) out[k] = canonical_numbers(v);
    return out;
  }
  if (j.is_array()) {
    json out = json::array();
    for (const auto& v : j) out.push_back(canonical_numbers(v));
    return out;
  }
  if (j.is_number_integer()) return j.dump();
  if (j.is_number_float()) {
    std::ostringstream s;
    s << std::setprecision(17) << j.get<double>();
    return s.str();
  }
  return j;
}

std::string render_json(const RunReport& r) {
  json root;
  root["artifact_version"] = r.version;
  root["experiment"] = std::string(to_string(r.experiment));
  root["seed"] = num(r.seed);
  root["config"] = r.config_echo.empty() ? json::object() : canonical_numbers(json::parse(r.config_echo));
  if (r.setup) root["setup"] = setup_json(*r.setup);
  if (r.latency) root["latency"] = latency_json(*r.latency);
  if (!r.softfail.empty()) {
    json cases = json::array();
    for (std::size_t i = 0; i < r.softfail.size(); ++i) cases.push_back(softfail_json(r.softfail[i], i));
    root["softfail"] = cases;
  }
  return root.dump(2) + "\n";
}

const char* const kKpiLabels[] = {"kpi_ns_deploy", "kpi_connectivity", "kpi_e2e", "kpi_e2e_excl_transponder",
                                  "transponder_phase"};

std::array<KpiStats, 5> stat_rows(const SetupSummary& s) {
  return {s.ns_deploy, s.connectivity, s.e2e, s.e2e_excl_transponder, s.transponder_phase};
}

std::string render_csv(const RunReport& r) {
  std::ostringstream out;
  const bool sections = static_cast<int>(r.setup.has_value()) + static_cast<int>(r.latency.has_value()) +
                            static_cast<int>(!r.softfail.empty()) > 1;
  if (r.setup) {
    if (sections) out << "# setup\n";
    out << "kpi,mean_s,std_s,min_s,max_s\n";
    const auto rows = stat_rows(summarize(*r.setup));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out << kKpiLabels[i] << ',' << fixed(rows[i].mean_s, 3) << ',' << fixed(rows[i].std_s, 3) << ','
          << fixed(rows[i].min_s, 3) << ',' << fixed(rows[i].max_s, 3) << '\n';
    }
  }
  if (r.latency) {
    if (sections) out << (r.setup ? "\n" : "") << "# latency\n";
    out << "link_length_km,measured_us,estimated_us,delta_us\n";
    for (const auto& m : r.latency->rows) {
      out << km_label(m.link_length_m) << ',' << ns_as_us(m.measured_rt_ns) << ',' << ns_as_us(m.estimated_rt_prop_ns)
          << ',' << ns_as_us(m.delta_ns) << '\n';
    }
  }
  if (!r.softfail.empty()) {
    if (sections) out << "\n# softfail\n";
    out << "case,rate_db_per_s,kappa,detection_time_min,anticipation_time_min,predicted_anticipation_min,"
           "mean_detection_snr_db,mean_detection_ber,restored,restoration_failed\n";
    for (std::size_t i = 0; i < r.softfail.size(); ++i) {
      const auto& c = r.softfail[i];
      out << i + 1 << ',' << fixed(c.config.rate_db_per_s, 4) << ',' << fixed(c.config.kappa, 4) << ','
          << fixed(minutes(c.detection_time), 4) << ',' << fixed(minutes(c.anticipation), 4) << ','
          << fixed(minutes(c.predicted_anticipation), 4) << ',' << fixed(c.mean_detection_snr_db, 3) << ','
          << scientific(c.mean_detection_ber, 3) << ',' << c.restored << ',' << c.restoration_failed << '\n';
    }
  }
  return out.str();
}

std::string pad(const std::string& s, std::size_t width, bool right = false) {
  if (s.size() >= width) return s;
  return right ? std::string(width - s.size(), ' ') + s : s + std::string(width - s.size(), ' ');
}

std::string render_table(const RunReport& r) {
  std::ostringstream out;
  bool first = true;
  const auto gap = [&] {
    if (!first) out << '\n';
    first = false;
  };
  if (r.setup) {
    gap();
    const auto rows = stat_rows(summarize(*r.setup));
    const char* names[] = {"NS deployment", "Connectivity", "End-to-end", "End-to-end excl. transponders",
                           "Transponder config + warm-up"};
    out << "Service setup time (" << r.setup->runs.size() << " repetitions)\n";
    out << pad("KPI", 31) << pad("mean [s]", 11, true) << pad("std [s]", 11, true) << pad("min [s]", 11, true)
        << pad("max [s]", 11, true) << '\n';
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out << pad(names[i], 31) << pad(fixed(rows[i].mean_s, 3), 11, true) << pad(fixed(rows[i].std_s, 3), 11, true)
          << pad(fixed(rows[i].min_s, 3), 11, true) << pad(fixed(rows[i].max_s, 3), 11, true) << '\n';
    }
  }
  if (r.latency) {
    gap();
    out << "End-to-end latency measurements\n";
    out << pad("Link Length [km]", 18) << pad("Measured Latency [us]", 23, true)
        << pad("Estimated Round Trip Propagation Delay [us]", 45, true) << pad("Delta [us]", 12, true) << '\n';
    for (const auto& m : r.latency->rows) {
      out << pad(km_label(m.link_length_m), 18) << pad(ns_as_us(m.measured_rt_ns), 23, true)
          << pad(ns_as_us(m.estimated_rt_prop_ns), 45, true) << pad(ns_as_us(m.delta_ns), 12, true) << '\n';
    }
    const auto& b = r.latency->budget;
    out << "\nLatency budget\n";
    for (std::size_t i = 0; i < b.components.size(); ++i)
      out << pad(b.components[i], 31) << pad(fixed(b.fitted_ns[i] / 1000.0, 3) + " us", 14, true) << '\n';
    out << pad("total", 31) << pad(fixed(b.total_ns() / 1000.0, 3) + " us", 14, true) << '\n';
  }
  if (!r.softfail.empty()) {
    gap();
    out << "Fault degradation time\n";
    out << pad("", 24);
    for (std::size_t i = 0; i < r.softfail.size(); ++i) out << pad("Case " + std::to_string(i + 1), 14, true);
    out << '\n';
    const auto row = [&](const char* label, auto cell) {
      out << pad(label, 24);
      for (const auto& c : r.softfail) out << pad(cell(c), 14, true);
      out << '\n';
    };
    row("Detection time", [](const SoftFailReport& c) { return fixed(minutes(c.detection_time), 2) + " min"; });
    row("Anticipation time", [](const SoftFailReport& c) { return fixed(minutes(c.anticipation), 2) + " min"; });
    row("Mean detection SNR", [](const SoftFailReport& c) { return fixed(c.mean_detection_snr_db, 2) + " dB"; });
    row("Mean detection BER", [](const SoftFailReport& c) { return scientific(c.mean_detection_ber, 2); });
    row("Restored", [](const SoftFailReport& c) {
      return std::to_string(c.restored) + "/" + std::to_string(c.repetitions.size());
    });
  }
  return out.str();
}

}  // namespace

SetupSummary summarize(const SetupPayload& payload) {
  std::array<std::vector<double>, 5> cols;
  for (const auto& r : payload.runs) {
    cols[0].push_back(to_seconds(r.kpis.ns_deploy));
    cols[1].push_back(to_seconds(r.kpis.connectivity));
    cols[2].push_back(to_seconds(r.kpis.e2e));
    cols[3].push_back(to_seconds(r.kpis.e2e_excl_transponder));
    cols[4].push_back(to_seconds(r.record.transponder_phase));
  }
  return {stats(cols[0]), stats(cols[1]), stats(cols[2]), stats(cols[3]), stats(cols[4])};
}

std::string emit_report(const RunReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::Json: return render_json(report);
    case ReportFormat::Csv: return render_csv(report);
    case ReportFormat::Table: return render_table(report);
  }
  return {};
}

std::string emit_ber_trace(const SoftFailReport& report) {
  std::ostringstream out;
  out << "t_s,snr_db,pre_fec_ber\n";
  for (const auto& s : report.trace) {
    out << ns_as_seconds(s.t.time_since_epoch()) << ',' << fixed(s.snr_db, 6) << ',' << scientific(s.pre_fec_ber, 6)
        << '\n';
  }
  return out.str();
}

}  // namespace mst
