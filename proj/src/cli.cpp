#include "mst/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mst/error.hpp"
#include "mst/report.hpp"
#include "mst/scenario.hpp"

namespace mst {

namespace {

struct Invocation {
  std::string scenario_path;
  std::optional<int> repeat;
  std::optional<std::uint64_t> seed;
  std::vector<double> rates;
  std::string format = "json";
  std::string out_path;
  std::string trace_path;
  std::string ber_trace_path;
  bool lenient = false;
  bool serial = false;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ValidationError, "scenario: cannot read '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << body;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

std::string case_path(const std::string& path, std::size_t index, std::size_t count) {
  if (count == 1) return path;
  std::filesystem::path p(path);
  const std::string name = p.stem().string() + "_case" + std::to_string(index + 1) + p.extension().string();
  return (p.parent_path() / name).string();
}

void apply_overrides(Scenario& s, const std::string& command, const Invocation& inv) {
  if (command == "setup") s.experiment = ExperimentKind::SetupKpi;
  if (command == "latency") s.experiment = ExperimentKind::Latency;
  if (command == "softfail") s.experiment = ExperimentKind::SoftFail;
  if (command == "demo") s.experiment = ExperimentKind::FullDemo;
  if (inv.seed) s.seed = *inv.seed;
  if (inv.repeat) {
    if (s.experiment == ExperimentKind::SoftFail) {
      if (s.softfail) s.softfail->repetitions = *inv.repeat;
    } else if (s.service) {
      s.service->repetitions = *inv.repeat;
    }
  }
  if (!inv.rates.empty() && s.softfail) {
    auto& cases = s.softfail->cases;
    const SoftFailCase templ = cases.empty() ? SoftFailCase{} : cases.back();
    cases.resize(inv.rates.size(), templ);
    for (std::size_t i = 0; i < inv.rates.size(); ++i) cases[i].rate_db_per_s = inv.rates[i];
  }
}

int execute(const std::string& command, const Invocation& inv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> warnings;
  LoadOptions opts{inv.lenient, &warnings};
  Scenario s = load_scenario(read_file(inv.scenario_path), opts);
  for (const auto& w : warnings) err << "warning: " << w << '\n';
  const ReportFormat format = parse_report_format(inv.format);

  if (command == "validate") {
    if (!inv.out_path.empty()) write_file(inv.out_path, "");
    return kExitOk;
  }

  apply_overrides(s, command, inv);
  // Re-run validation so overrides are checked against the same rules as files.
  s = load_scenario(serialize_scenario(s));

  RunOptions ropts;
  ropts.execution = inv.serial ? Execution::Serial : Execution::Parallel;
  ropts.capture_events = !inv.trace_path.empty();
  RunOutput result = run_scenario(s, ropts);

  const std::string body = emit_report(result.report, format);
  if (inv.out_path.empty())
    out << body;
  else
    write_file(inv.out_path, body);
  if (!inv.trace_path.empty()) write_file(inv.trace_path, result.event_trace);
  if (!inv.ber_trace_path.empty()) {
    const auto& cases = result.report.softfail;
    if (cases.empty()) err << "warning: --ber-trace ignored, no soft-failure cases were run\n";
    for (std::size_t i = 0; i < cases.size(); ++i)
      write_file(case_path(inv.ber_trace_path, i, cases.size()), emit_ber_trace(cases[i]));
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Discrete-event twin of a latency-aware metro optical network", "mst"};
  app.require_subcommand(1, 1);
  Invocation inv;

  const auto add_common = [&](CLI::App* sub, bool runs) {
    sub->add_option("--scenario", inv.scenario_path, "Scenario JSON file")->required();
    sub->add_option("--format", inv.format, "Report format")
        ->check(CLI::IsMember({"json", "csv", "table"}))
        ->capture_default_str();
    sub->add_option("--out", inv.out_path, "Write the report here instead of stdout");
    sub->add_flag("--lenient", inv.lenient, "Warn about unknown scenario keys instead of rejecting them");
    if (!runs) return;
    sub->add_option("--seed", inv.seed, "Override the scenario seed");
    sub->add_option("--trace", inv.trace_path, "Write the fired-event log (fire_at_ns,sequence,kind)");
    sub->add_flag("--serial", inv.serial, "Run repetitions on one thread");
  };

  auto* setup = app.add_subcommand("setup", "Service setup KPIs over repeated deployments");
  add_common(setup, true);
  setup->add_option("--repeat", inv.repeat, "Number of deployments")->check(CLI::PositiveNumber);

  auto* latency = app.add_subcommand("latency", "Probe round-trip latency per link length and budget fit");
  add_common(latency, true);

  auto* softfail = app.add_subcommand("softfail", "Soft-failure detection, anticipation and restoration");
  add_common(softfail, true);
  softfail->add_option("--repeat", inv.repeat, "Repetitions per case")->check(CLI::PositiveNumber);
  softfail->add_option("--rate", inv.rates, "Ramp rate in dB/s; repeat for several cases")
      ->check(CLI::PositiveNumber)
      ->take_all()
      ->allow_extra_args(false);
  softfail->add_option("--ber-trace", inv.ber_trace_path,
                       "Write t_s,snr_db,pre_fec_ber of repetition 0 (one file per case, suffixed _caseN)");

  auto* demo = app.add_subcommand("demo", "Setup, latency and soft-failure experiments in sequence");
  add_common(demo, true);
  demo->add_option("--repeat", inv.repeat, "Number of setup deployments")->check(CLI::PositiveNumber);
  demo->add_option("--rate", inv.rates, "Ramp rate in dB/s; repeat for several cases")
      ->check(CLI::PositiveNumber)
      ->take_all()
      ->allow_extra_args(false);
  demo->add_option("--ber-trace", inv.ber_trace_path, "Write the soft-failure BER trace");

  auto* validate = app.add_subcommand("validate", "Parse and validate a scenario, print nothing on success");
  add_common(validate, false);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return execute(command, inv, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    const bool input = e.code() == ErrorCode::ValidationError || e.code() == ErrorCode::ParseError;
    return input ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace mst
