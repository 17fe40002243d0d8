#include "mst/scenario.hpp"

#include <algorithm>
#include <json.hpp>
#include <set>
#include <sstream>

#include "mst/error.hpp"

namespace mst {

using nlohmann::json;

namespace {

constexpr std::uint64_t kSetupStream = 0x5e7;
constexpr std::uint64_t kLatencyStream = 0x1a7;

[[noreturn]] void invalid(const std::string& key, const std::string& why) {
  throw Error(ErrorCode::ValidationError, key + ": " + why);
}

/// Strict view of one JSON object: every key must be read, or it is reported
/// as unknown when the reader is closed.
class Reader {
 public:
  Reader(const json& j, std::string path, const LoadOptions& opts) : j_(j), path_(std::move(path)), opts_(opts) {
    if (!j_.is_object()) invalid(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string key_path(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  bool has(const char* key) const { return j_.contains(key); }

  const json& raw(const char* key) {
    seen_.insert(key);
    if (!j_.contains(key)) invalid(key_path(key), "required key missing");
    return j_.at(key);
  }

  template <class T>
  T req(const char* key) {
    return convert<T>(raw(key), key_path(key));
  }

  template <class T>
  T opt(const char* key, T fallback) {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    return convert<T>(j_.at(key), key_path(key));
  }

  template <class T>
  std::optional<T> maybe(const char* key) {
    seen_.insert(key);
    if (!j_.contains(key)) return std::nullopt;
    return convert<T>(j_.at(key), key_path(key));
  }

  Reader object(const char* key) { return Reader(raw(key), key_path(key), opts_); }

  std::vector<Reader> objects(const char* key) {
    const json& arr = raw(key);
    if (!arr.is_array()) invalid(key_path(key), "expected an array");
    std::vector<Reader> out;
    for (std::size_t i = 0; i < arr.size(); ++i)
      out.emplace_back(arr[i], key_path(key) + "[" + std::to_string(i) + "]", opts_);
    return out;
  }

  template <class T>
  std::vector<T> list(const char* key) {
    const json& arr = raw(key);
    if (!arr.is_array()) invalid(key_path(key), "expected an array");
    std::vector<T> out;
    for (std::size_t i = 0; i < arr.size(); ++i)
      out.push_back(convert<T>(arr[i], key_path(key) + "[" + std::to_string(i) + "]"));
    return out;
  }

  void close() const {
    for (const auto& [k, _] : j_.items()) {
      if (seen_.contains(k)) continue;
      if (!opts_.lenient) invalid(key_path(k), "unknown key");
      if (opts_.warnings) opts_.warnings->push_back("ignoring unknown key " + key_path(k));
    }
  }

 private:
  template <class T>
  static T convert(const json& v, const std::string& where) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) invalid(where, "expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) invalid(where, "expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) invalid(where, "expected a number");
      return v.get<double>();
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_unsigned()) invalid(where, "expected a non-negative integer");
      return v.get<T>();
    } else {
      static_assert(std::is_integral_v<T>);
      if (!v.is_number_integer()) invalid(where, "expected an integer");
      return v.get<T>();
    }
  }

  const json& j_;
  std::string path_;
  const LoadOptions& opts_;
  std::set<std::string, std::less<>> seen_;
};

ExperimentKind parse_kind(const std::string& s) {
  if (s == "setup_kpi") return ExperimentKind::SetupKpi;
  if (s == "latency") return ExperimentKind::Latency;
  if (s == "softfail") return ExperimentKind::SoftFail;
  if (s == "full_demo") return ExperimentKind::FullDemo;
  invalid("experiment", "unknown experiment kind '" + s + "'");
}

TopologySpec read_topology(Reader r) {
  TopologySpec t;
  t.roadms = r.list<std::string>("roadms");
  for (auto sw : r.objects("switches")) {
    t.switches.push_back({sw.req<std::string>("id"), sw.opt<std::int64_t>("per_pass_latency_ns", 645)});
    sw.close();
  }
  for (auto c : r.objects("compute")) {
    t.compute.push_back({c.req<std::string>("id"), c.req<int>("vcpu"), c.req<int>("mem_mb"),
                         c.req<std::string>("switch")});
    c.close();
  }
  for (auto tp : r.objects("transponders")) {
    TransponderSpec spec;
    spec.id = tp.req<std::string>("id");
    spec.roadm = tp.req<std::string>("roadm");
    spec.attached_switch = tp.req<std::string>("switch");
    spec.compute = tp.req<std::string>("compute");
    spec.config_s = tp.opt("config_s", spec.config_s);
    spec.warmup_s = tp.opt("warmup_s", spec.warmup_s);
    tp.close();
    t.transponders.push_back(spec);
  }
  for (auto l : r.objects("links")) {
    LinkSpec spec;
    spec.id = l.req<std::string>("id");
    spec.a = l.req<std::string>("a");
    spec.b = l.req<std::string>("b");
    spec.length_m = l.req<double>("length_m");
    spec.group_index = l.opt("group_index", spec.group_index);
    spec.base_attenuation_db = l.opt("base_attenuation_db", spec.base_attenuation_db);
    spec.legacy_residual_delay_ns = l.opt<std::int64_t>("legacy_residual_delay_ns", 0);
    l.close();
    t.links.push_back(spec);
  }
  t.grid_size = r.opt("grid_size", kDefaultGridSize);
  r.close();
  return t;
}

ServiceSection read_service(Reader r) {
  ServiceSection s;
  s.ns.name = r.opt<std::string>("name", s.ns.name);
  const auto ends = r.list<std::string>("endpoints");
  if (ends.size() != 2) invalid(r.key_path("endpoints"), "exactly two transponder ids required");
  s.ns.endpoints = {ends[0], ends[1]};
  s.ns.bandwidth_bps = r.opt("bandwidth_bps", s.ns.bandwidth_bps);
  s.ns.max_rt_latency_ns = r.opt<std::int64_t>("max_rt_latency_ns", s.ns.max_rt_latency_ns);
  s.ns.telemetry_period_s = r.opt("telemetry_period_s", s.ns.telemetry_period_s);
  s.ns.latency_probe = r.opt("latency_probe", s.ns.latency_probe);
  for (auto v : r.objects("vnfs")) {
    VnfDescriptor d;
    d.name = v.req<std::string>("name");
    d.vcpu = v.req<int>("vcpu");
    d.mem_mb = v.req<int>("mem_mb");
    d.target_compute = v.req<std::string>("compute");
    d.instantiation_s = v.opt("instantiation_s", d.instantiation_s);
    d.instantiation_cv = v.opt("instantiation_cv", d.instantiation_cv);
    v.close();
    s.ns.vnfs.push_back(d);
  }
  if (r.has("timing")) {
    auto t = r.object("timing");
    auto& c = s.timing;
    c.hop_latency_s = t.opt("hop_latency_s", c.hop_latency_s);
    c.path_computation_s = t.opt("path_computation_s", c.path_computation_s);
    c.roadm_config_s = t.opt("roadm_config_s", c.roadm_config_s);
    c.roadm_config_cv = t.opt("roadm_config_cv", c.roadm_config_cv);
    c.transponder_cv = t.opt("transponder_cv", c.transponder_cv);
    c.probe_verify_s = t.opt("probe_verify_s", c.probe_verify_s);
    c.retune_s = t.opt("retune_s", c.retune_s);
    c.jitter = t.opt("jitter", c.jitter);
    t.close();
  }
  s.repetitions = r.opt("repetitions", s.repetitions);
  r.close();
  return s;
}

LatencySettings read_latency(Reader r) {
  LatencySettings l;
  l.link = r.opt<std::string>("link", "");
  for (auto c : r.objects("cases")) {
    LatencyCase lc;
    lc.length_m = c.req<double>("length_m");
    lc.group_index = c.maybe<double>("group_index");
    lc.legacy_residual_delay_ns = c.opt<std::int64_t>("legacy_residual_delay_ns", 0);
    c.close();
    l.cases.push_back(lc);
  }
  l.switch_overhead_from_topology = true;
  if (r.has("probe")) {
    auto p = r.object("probe");
    l.probe.probe_overhead_ns = p.opt<std::int64_t>("probe_overhead_ns", l.probe.probe_overhead_ns);
    if (auto sw = p.maybe<std::int64_t>("switch_overhead_ns")) {
      l.probe.switch_overhead_ns = *sw;
      l.switch_overhead_from_topology = false;
    }
    l.probe.optical_device_overhead_ns =
        p.opt<std::int64_t>("optical_device_overhead_ns", l.probe.optical_device_overhead_ns);
    l.probe.jitter_sigma_ns = p.opt<std::int64_t>("jitter_sigma_ns", l.probe.jitter_sigma_ns);
    p.close();
  }
  l.calibration_length_m = r.opt("calibration_length_m", l.calibration_length_m);
  r.close();
  return l;
}

SoftFailSettings read_softfail(Reader r) {
  SoftFailSettings s;
  for (auto c : r.objects("cases")) {
    SoftFailCase sc;
    sc.rate_db_per_s = c.req<double>("rate_db_per_s");
    sc.kappa = c.opt("kappa", sc.kappa);
    sc.drop_threshold_db = c.maybe<double>("drop_threshold_db");
    c.close();
    s.cases.push_back(sc);
  }
  s.repetitions = r.opt("repetitions", s.repetitions);
  s.noise_sigma_db = r.opt("noise_sigma_db", s.noise_sigma_db);
  s.ramp_start_offset_s = r.opt("ramp_start_offset_s", s.ramp_start_offset_s);
  s.horizon_s = r.opt("horizon_s", s.horizon_s);
  s.restore = r.opt("restore", s.restore);
  s.link = r.opt<std::string>("link", "");
  if (r.has("detector")) {
    auto d = r.object("detector");
    auto& c = s.detector;
    c.sample_period = from_seconds(d.opt("sample_period_s", to_seconds(c.sample_period)));
    c.baseline_window = d.opt("baseline_window", c.baseline_window);
    c.drop_threshold_db = d.opt("drop_threshold_db", c.drop_threshold_db);
    c.consecutive_required = d.opt("consecutive_required", c.consecutive_required);
    c.regression_window = d.opt("regression_window", c.regression_window);
    d.close();
  }
  if (r.has("signal")) {
    auto g = r.object("signal");
    auto& m = s.signal;
    m.snr0_db = g.opt("snr0_db", m.snr0_db);
    m.implementation_penalty_db = g.opt("implementation_penalty_db", m.implementation_penalty_db);
    const auto ber = g.maybe<double>("fail_ber_above");
    const auto snr = g.maybe<double>("fail_snr_below_db");
    if (ber && snr) invalid(g.key_path("fail_ber_above"), "give either fail_ber_above or fail_snr_below_db");
    if (ber) m.fail = {FailCriterion::Kind::BerAbove, *ber};
    if (snr) m.fail = {FailCriterion::Kind::SnrBelowDb, *snr};
    g.close();
  }
  r.close();
  return s;
}

void validate(const Scenario& s) {
  const auto& t = s.topology;
  std::set<std::string> roadms(t.roadms.begin(), t.roadms.end());
  for (std::size_t i = 0; i < t.links.size(); ++i) {
    const std::string key = "topology.links[" + std::to_string(i) + "]";
    if (!roadms.contains(t.links[i].a)) invalid(key + ".a", "unknown node '" + t.links[i].a + "'");
    if (!roadms.contains(t.links[i].b)) invalid(key + ".b", "unknown node '" + t.links[i].b + "'");
  }
  RingTopology ring;
  try {
    ring = build_ring(t);
  } catch (const Error& e) {
    invalid("topology", e.what());
  }

  const bool needs_latency = s.experiment == ExperimentKind::Latency || s.experiment == ExperimentKind::FullDemo;
  const bool needs_softfail = s.experiment == ExperimentKind::SoftFail || s.experiment == ExperimentKind::FullDemo;
  if (!s.service) invalid("service", "required for every experiment kind");
  if (needs_latency && !s.latency) invalid("latency", "required for this experiment kind");
  if (needs_softfail && !s.softfail) invalid("softfail", "required for this experiment kind");

  const auto& svc = *s.service;
  for (std::size_t i = 0; i < 2; ++i) {
    if (!ring.has_transponder(NodeId{svc.ns.endpoints[i]}))
      invalid("service.endpoints[" + std::to_string(i) + "]", "unknown transponder '" + svc.ns.endpoints[i] + "'");
  }
  if (svc.ns.endpoints[0] == svc.ns.endpoints[1]) invalid("service.endpoints", "endpoints must differ");
  if (svc.ns.vnfs.size() < 2) invalid("service.vnfs", "at least two VNFs expected");
  for (std::size_t i = 0; i < svc.ns.vnfs.size(); ++i) {
    const auto& v = svc.ns.vnfs[i];
    const std::string key = "service.vnfs[" + std::to_string(i) + "]";
    if (!ring.has_compute(NodeId{v.target_compute})) invalid(key + ".compute", "unknown compute node");
    if (v.vcpu <= 0 || v.mem_mb <= 0) invalid(key, "demands must be positive");
    if (v.instantiation_s < 0 || v.instantiation_cv < 0) invalid(key, "durations must be non-negative");
  }
  if (svc.repetitions <= 0) invalid("service.repetitions", "must be positive");
  const auto& tm = svc.timing;
  for (double v : {tm.hop_latency_s, tm.path_computation_s, tm.roadm_config_s, tm.roadm_config_cv,
                   tm.transponder_cv, tm.probe_verify_s, tm.retune_s}) {
    if (v < 0) invalid("service.timing", "values must be non-negative");
  }

  if (s.latency) {
    const auto& l = *s.latency;
    if (!l.link.empty()) {
      const bool found = std::any_of(t.links.begin(), t.links.end(), [&](const auto& x) { return x.id == l.link; });
      if (!found) invalid("latency.link", "unknown link '" + l.link + "'");
    }
    if (l.cases.empty()) invalid("latency.cases", "at least one case required");
    for (std::size_t i = 0; i < l.cases.size(); ++i) {
      const auto& c = l.cases[i];
      const std::string key = "latency.cases[" + std::to_string(i) + "]";
      if (c.length_m < 0) invalid(key + ".length_m", "must be non-negative");
      if (c.group_index && (*c.group_index < 1.0 || *c.group_index > 2.0))
        invalid(key + ".group_index", "must lie in [1, 2]");
      if (c.legacy_residual_delay_ns < 0) invalid(key + ".legacy_residual_delay_ns", "must be non-negative");
    }
    const auto& p = l.probe;
    if (p.probe_overhead_ns < 0 || p.switch_overhead_ns < 0 || p.optical_device_overhead_ns < 0 ||
        p.jitter_sigma_ns < 0)
      invalid("latency.probe", "overheads must be non-negative");
    if (l.calibration_length_m < 0) invalid("latency.calibration_length_m", "must be non-negative");
  }

  if (s.softfail) {
    const auto& f = *s.softfail;
    if (f.cases.empty()) invalid("softfail.cases", "at least one case required");
    for (std::size_t i = 0; i < f.cases.size(); ++i) {
      const auto& c = f.cases[i];
      const std::string key = "softfail.cases[" + std::to_string(i) + "]";
      if (!(c.rate_db_per_s > 0)) invalid(key + ".rate_db_per_s", "must be positive");
      if (!(c.kappa > 0 && c.kappa <= 1.5)) invalid(key + ".kappa", "must lie in (0, 1.5]");
      if (c.drop_threshold_db && !(*c.drop_threshold_db > 0)) invalid(key + ".drop_threshold_db", "must be positive");
    }
    if (f.repetitions <= 0) invalid("softfail.repetitions", "must be positive");
    if (f.noise_sigma_db < 0) invalid("softfail.noise_sigma_db", "must be non-negative");
    if (f.horizon_s <= 0) invalid("softfail.horizon_s", "must be positive");
    const auto& d = f.detector;
    if (d.sample_period.count() <= 0) invalid("softfail.detector.sample_period_s", "must be positive");
    if (d.baseline_window <= 0) invalid("softfail.detector.baseline_window", "must be positive");
    if (d.drop_threshold_db <= 0) invalid("softfail.detector.drop_threshold_db", "must be positive");
    if (d.consecutive_required <= 0) invalid("softfail.detector.consecutive_required", "must be positive");
    if (d.regression_window <= 0) invalid("softfail.detector.regression_window", "must be positive");
    const double periods = f.ramp_start_offset_s / to_seconds(d.sample_period);
    if (std::abs(periods - std::round(periods)) > 1e-9)
      invalid("softfail.ramp_start_offset_s", "must be a whole number of sample periods");
    if (std::round(periods) < d.baseline_window)
      invalid("softfail.ramp_start_offset_s", "ramp would start before the baseline window is filled");
    if (!f.link.empty()) {
      const bool found = std::any_of(t.links.begin(), t.links.end(), [&](const auto& x) { return x.id == f.link; });
      if (!found) invalid("softfail.link", "unknown link '" + f.link + "'");
    }
    if (f.signal.implementation_penalty_db < 0) invalid("softfail.signal.implementation_penalty_db", "must be >= 0");
    if (f.signal.fail.kind == FailCriterion::Kind::BerAbove && !(f.signal.fail.value > 0 && f.signal.fail.value < 0.5))
      invalid("softfail.signal.fail_ber_above", "must lie in (0, 0.5)");
    if (!(f.signal.snr0_db > fail_snr_db(f.signal)))
      invalid("softfail.signal.snr0_db", "baseline SNR must exceed the fail threshold");
  }
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::SetupKpi: return "setup_kpi";
    case ExperimentKind::Latency: return "latency";
    case ExperimentKind::SoftFail: return "softfail";
    case ExperimentKind::FullDemo: return "full_demo";
  }
  return "unknown";
}

Scenario load_scenario(std::string_view document, const LoadOptions& options) {
  json root;
  try {
    root = json::parse(document);
  } catch (const json::parse_error& e) {
    // nlohmann reports the byte just past the offending token.
    const auto [line, col] = line_column(document, e.byte > 0 ? e.byte - 1 : 0);
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what());
  }

  Reader r(root, "", options);
  Scenario s;
  s.experiment = parse_kind(r.req<std::string>("experiment"));
  s.seed = r.req<std::uint64_t>("seed");
  s.topology = read_topology(r.object("topology"));
  if (r.has("service")) s.service = read_service(r.object("service"));
  if (r.has("latency")) s.latency = read_latency(r.object("latency"));
  if (r.has("softfail")) s.softfail = read_softfail(r.object("softfail"));
  r.close();
  validate(s);
  return s;
}

std::string serialize_scenario(const Scenario& s) {
  json root;
  root["experiment"] = std::string(to_string(s.experiment));
  root["seed"] = s.seed;

  json topo;
  topo["roadms"] = s.topology.roadms;
  topo["switches"] = json::array();
  for (const auto& sw : s.topology.switches)
    topo["switches"].push_back({{"id", sw.id}, {"per_pass_latency_ns", sw.per_pass_latency_ns}});
  topo["compute"] = json::array();
  for (const auto& c : s.topology.compute)
    topo["compute"].push_back({{"id", c.id}, {"vcpu", c.vcpu}, {"mem_mb", c.mem_mb}, {"switch", c.attached_switch}});
  topo["transponders"] = json::array();
  for (const auto& t : s.topology.transponders)
    topo["transponders"].push_back({{"id", t.id},
                                    {"roadm", t.roadm},
                                    {"switch", t.attached_switch},
                                    {"compute", t.compute},
                                    {"config_s", t.config_s},
                                    {"warmup_s", t.warmup_s}});
  topo["links"] = json::array();
  for (const auto& l : s.topology.links)
    topo["links"].push_back({{"id", l.id},
                             {"a", l.a},
                             {"b", l.b},
                             {"length_m", l.length_m},
                             {"group_index", l.group_index},
                             {"base_attenuation_db", l.base_attenuation_db},
                             {"legacy_residual_delay_ns", l.legacy_residual_delay_ns}});
  topo["grid_size"] = s.topology.grid_size;
  root["topology"] = topo;

  if (s.service) {
    const auto& sv = *s.service;
    json j;
    j["name"] = sv.ns.name;
    j["endpoints"] = {sv.ns.endpoints[0], sv.ns.endpoints[1]};
    j["bandwidth_bps"] = sv.ns.bandwidth_bps;
    j["max_rt_latency_ns"] = sv.ns.max_rt_latency_ns;
    j["telemetry_period_s"] = sv.ns.telemetry_period_s;
    j["latency_probe"] = sv.ns.latency_probe;
    j["vnfs"] = json::array();
    for (const auto& v : sv.ns.vnfs)
      j["vnfs"].push_back({{"name", v.name},
                           {"vcpu", v.vcpu},
                           {"mem_mb", v.mem_mb},
                           {"compute", v.target_compute},
                           {"instantiation_s", v.instantiation_s},
                           {"instantiation_cv", v.instantiation_cv}});
    const auto& t = sv.timing;
    j["timing"] = {{"hop_latency_s", t.hop_latency_s},       {"path_computation_s", t.path_computation_s},
                   {"roadm_config_s", t.roadm_config_s},     {"roadm_config_cv", t.roadm_config_cv},
                   {"transponder_cv", t.transponder_cv},     {"probe_verify_s", t.probe_verify_s},
                   {"retune_s", t.retune_s},                 {"jitter", t.jitter}};
    j["repetitions"] = sv.repetitions;
    root["service"] = j;
  }

  if (s.latency) {
    const auto& l = *s.latency;
    json j;
    j["link"] = l.link;
    j["cases"] = json::array();
    for (const auto& c : l.cases) {
      json cj{{"length_m", c.length_m}, {"legacy_residual_delay_ns", c.legacy_residual_delay_ns}};
      if (c.group_index) cj["group_index"] = *c.group_index;
      j["cases"].push_back(cj);
    }
    json p{{"probe_overhead_ns", l.probe.probe_overhead_ns},
           {"optical_device_overhead_ns", l.probe.optical_device_overhead_ns},
           {"jitter_sigma_ns", l.probe.jitter_sigma_ns}};
    if (!l.switch_overhead_from_topology) p["switch_overhead_ns"] = l.probe.switch_overhead_ns;
    j["probe"] = p;
    j["calibration_length_m"] = l.calibration_length_m;
    root["latency"] = j;
  }

  if (s.softfail) {
    const auto& f = *s.softfail;
    json j;
    j["cases"] = json::array();
    for (const auto& c : f.cases) {
      json cj{{"rate_db_per_s", c.rate_db_per_s}, {"kappa", c.kappa}};
      if (c.drop_threshold_db) cj["drop_threshold_db"] = *c.drop_threshold_db;
      j["cases"].push_back(cj);
    }
    j["repetitions"] = f.repetitions;
    j["noise_sigma_db"] = f.noise_sigma_db;
    j["ramp_start_offset_s"] = f.ramp_start_offset_s;
    j["horizon_s"] = f.horizon_s;
    j["restore"] = f.restore;
    j["link"] = f.link;
    const auto& d = f.detector;
    j["detector"] = {{"sample_period_s", to_seconds(d.sample_period)},
                     {"baseline_window", d.baseline_window},
                     {"drop_threshold_db", d.drop_threshold_db},
                     {"consecutive_required", d.consecutive_required},
                     {"regression_window", d.regression_window}};
    json g{{"snr0_db", f.signal.snr0_db}, {"implementation_penalty_db", f.signal.implementation_penalty_db}};
    if (f.signal.fail.kind == FailCriterion::Kind::BerAbove)
      g["fail_ber_above"] = f.signal.fail.value;
    else
      g["fail_snr_below_db"] = f.signal.fail.value;
    j["signal"] = g;
    root["softfail"] = j;
  }
  return root.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Runs

namespace {

void append_events(std::string* sink, const std::string& label, const std::vector<TraceRecord>& events) {
  if (!sink) return;
  std::ostringstream out;
  out << "# " << label << '\n';
  for (const auto& r : events) out << r.fire_at_ns << ',' << r.sequence << ',' << r.kind << '\n';
  *sink += out.str();
}

struct CapturedSetup {
  SetupRun run;
  std::vector<TraceRecord> events;
};

}  // namespace

SetupPayload run_setup_experiment(const Scenario& s, const RunOptions& options, std::string* event_trace) {
  const auto& svc = s.service.value();
  auto runs = map_repetitions(static_cast<std::size_t>(svc.repetitions), options.execution, [&](std::size_t r) {
    Kernel kernel;
    kernel.enable_trace(options.capture_events);
    RingTopology topo = build_ring(s.topology);
    ControlPlane cp(topo, kernel, svc.timing, CounterRng(s.seed).split(kSetupStream).split(r));
    ServiceRecord rec = deploy_service(cp, kernel, svc.ns);
    if (rec.status != ServiceStatus::Active) {
      throw Error(rec.failure.value_or(ErrorCode::IncompleteRecord),
                  "setup repetition " + std::to_string(r) + ": service did not become Active");
    }
    const KpiReport kpis = compute_kpis(rec);
    return CapturedSetup{SetupRun{std::move(rec), kpis}, kernel.trace()};
  });
  SetupPayload payload;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    append_events(event_trace, "setup repetition " + std::to_string(r), runs[r].events);
    payload.runs.push_back(std::move(runs[r].run));
  }
  return payload;
}

LatencyPayload run_latency_experiment(const Scenario& s, std::string* event_trace) {
  const auto& lat = s.latency.value();
  const auto& svc = s.service.value();
  const std::string link_id = lat.link.empty() ? build_ring(s.topology).links.front().id : lat.link;

  LatencyPayload payload;
  ProbeConfig resolved = lat.probe;
  for (std::size_t i = 0; i < lat.cases.size(); ++i) {
    const auto& c = lat.cases[i];
    TopologySpec spec = s.topology;
    for (auto& l : spec.links) {
      if (l.id != link_id) continue;
      l.length_m = c.length_m;
      if (c.group_index) l.group_index = *c.group_index;
      l.legacy_residual_delay_ns = c.legacy_residual_delay_ns;
    }
    Kernel kernel;
    kernel.enable_trace(event_trace != nullptr);
    RingTopology topo = build_ring(spec);
    CounterRng rng = CounterRng(s.seed).split(kLatencyStream).split(i);
    ControlPlane cp(topo, kernel, svc.timing, rng.split(1));
    const ServiceRecord rec = deploy_service(cp, kernel, svc.ns);
    if (rec.status != ServiceStatus::Active)
      throw Error(rec.failure.value_or(ErrorCode::IncompleteRecord), "latency case " + std::to_string(i));
    const std::size_t link_idx = topo.link_index(link_id);
    if (std::find(rec.path->links.begin(), rec.path->links.end(), link_idx) == rec.path->links.end()) {
      throw Error(ErrorCode::ValidationError,
                  "latency case " + std::to_string(i) + ": service path does not use link " + link_id);
    }
    ProbeConfig cfg = lat.probe;
    if (lat.switch_overhead_from_topology) cfg.switch_overhead_ns = switch_overhead_from_topology(*rec.path, topo);
    if (i == 0) resolved = cfg;
    CounterRng probe_rng = rng.split(2);
    LatencyMeasurement m;
    kernel.schedule(kernel.now(), "probe.measure",
                    [&](Kernel&) { m = measure_round_trip(*rec.path, topo, cfg, probe_rng); });
    kernel.run_to_end();
    payload.rows.push_back(m);
    append_events(event_trace, "latency case " + std::to_string(i), kernel.trace());
  }
  CounterRng cal_rng = CounterRng(s.seed).split(kLatencyStream).split(lat.cases.size());
  payload.calibration = run_calibration(resolved, lat.calibration_length_m, kDefaultGroupIndex, cal_rng);
  payload.budget = fit_budget(payload.calibration.measurements, payload.calibration.attribution);
  return payload;
}

std::vector<SoftFailReport> run_softfail_experiment(const Scenario& s, const RunOptions& options,
                                                    std::string* event_trace) {
  const auto& f = s.softfail.value();
  const auto& svc = s.service.value();
  SoftFailEnvironment env{s.topology, svc.ns, svc.timing, s.seed, options.capture_events};
  std::vector<SoftFailReport> reports;
  for (std::size_t i = 0; i < f.cases.size(); ++i) {
    reports.push_back(run_softfail_case(f.cases[i], i, f, env, options.execution));
    for (std::size_t r = 0; r < reports.back().repetitions.size(); ++r) {
      auto& rep = reports.back().repetitions[r];
      append_events(event_trace, "softfail case " + std::to_string(i + 1) + " repetition " + std::to_string(r),
                    rep.events);
      rep.events.clear();
    }
  }
  return reports;
}

RunOutput run_scenario(const Scenario& s, const RunOptions& options) {
  RunOutput out;
  auto& report = out.report;
  report.experiment = s.experiment;
  report.seed = s.seed;
  report.config_echo = serialize_scenario(s);
  std::string* trace = options.capture_events ? &out.event_trace : nullptr;

  const bool all = s.experiment == ExperimentKind::FullDemo;
  if (all || s.experiment == ExperimentKind::SetupKpi) report.setup = run_setup_experiment(s, options, trace);
  if (all || s.experiment == ExperimentKind::Latency) report.latency = run_latency_experiment(s, trace);
  if (all || s.experiment == ExperimentKind::SoftFail) report.softfail = run_softfail_experiment(s, options, trace);
  return out;
}

}  // namespace mst
