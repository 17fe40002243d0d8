#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mst/controlplane.hpp"
#include "mst/mda.hpp"
#include "mst/parallel.hpp"
#include "mst/probe.hpp"
#include "mst/topology.hpp"

namespace mst {

inline constexpr std::string_view kArtifactVersion = "1.0.0";

enum class ExperimentKind { SetupKpi, Latency, SoftFail, FullDemo };

std::string_view to_string(ExperimentKind kind);

struct ServiceSection {
  NsDescriptor ns;
  ControlTiming timing;
  int repetitions = 28;

  bool operator==(const ServiceSection&) const = default;
};

struct LatencyCase {
  double length_m = 0.0;
  std::optional<double> group_index;
  std::int64_t legacy_residual_delay_ns = 0;

  bool operator==(const LatencyCase&) const = default;
};

struct LatencySettings {
  std::string link;  // the span whose length is swept; empty means the first ring link
  std::vector<LatencyCase> cases;
  ProbeConfig probe;
  bool switch_overhead_from_topology = false;  // true when the file leaves it out
  double calibration_length_m = 2.1;

  bool operator==(const LatencySettings&) const = default;
};

struct Scenario {
  ExperimentKind experiment = ExperimentKind::SetupKpi;
  std::uint64_t seed = 0;
  TopologySpec topology;
  std::optional<ServiceSection> service;
  std::optional<LatencySettings> latency;
  std::optional<SoftFailSettings> softfail;

  bool operator==(const Scenario&) const = default;
};

struct LoadOptions {
  bool lenient = false;                   // warn about unknown keys instead of rejecting them
  std::vector<std::string>* warnings = nullptr;
};

/// Parses and validates a scenario document. Throws Error(ParseError) with line
/// and column for malformed JSON and Error(ValidationError) naming the
/// offending key otherwise.
Scenario load_scenario(std::string_view document, const LoadOptions& options = {});

/// Canonical JSON text of a scenario; load_scenario(serialize_scenario(s)) == s.
std::string serialize_scenario(const Scenario& s);

// ---------------------------------------------------------------------------
// Runs

struct SetupRun {
  ServiceRecord record;
  KpiReport kpis;
};

struct SetupPayload {
  std::vector<SetupRun> runs;
};

struct LatencyPayload {
  std::vector<LatencyMeasurement> rows;
  Calibration calibration;
  BudgetReport budget;
};

struct RunReport {
  ExperimentKind experiment = ExperimentKind::SetupKpi;
  std::uint64_t seed = 0;
  std::string config_echo;  // canonical scenario JSON
  std::string version{kArtifactVersion};
  std::optional<SetupPayload> setup;
  std::optional<LatencyPayload> latency;
  std::vector<SoftFailReport> softfail;
};

struct RunOptions {
  Execution execution = Execution::Parallel;
  bool capture_events = false;
};

struct RunOutput {
  RunReport report;
  std::string event_trace;  // `fire_at_ns,sequence,event_kind` per repetition
};

/// Builds fresh kernels and topologies per repetition and executes the
/// scenario's experiment. Results are ordered by repetition index, so the
/// execution mode never changes the report.
RunOutput run_scenario(const Scenario& s, const RunOptions& options = {});

SetupPayload run_setup_experiment(const Scenario& s, const RunOptions& options, std::string* event_trace = nullptr);
LatencyPayload run_latency_experiment(const Scenario& s, std::string* event_trace = nullptr);
std::vector<SoftFailReport> run_softfail_experiment(const Scenario& s, const RunOptions& options,
                                                    std::string* event_trace = nullptr);

}  // namespace mst
