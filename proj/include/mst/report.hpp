#pragma once

#include <string>
#include <string_view>

#include "mst/scenario.hpp"

namespace mst {

enum class ReportFormat { Json, Csv, Table };

ReportFormat parse_report_format(std::string_view name);

struct KpiStats {
  double mean_s = 0.0;
  double std_s = 0.0;  // sample standard deviation, 0 for a single run
  double min_s = 0.0;
  double max_s = 0.0;
};

struct SetupSummary {
  KpiStats ns_deploy;
  KpiStats connectivity;
  KpiStats e2e;
  KpiStats e2e_excl_transponder;
  KpiStats transponder_phase;
};

SetupSummary summarize(const SetupPayload& payload);

/// Canonical rendering: JSON with sorted keys and every number as a fixed
/// precision decimal string, CSV tables, or a fixed-width text table.
std::string emit_report(const RunReport& report, ReportFormat format);

/// `t_s,snr_db,pre_fec_ber` rows of the first repetition of one soft-failure case.
std::string emit_ber_trace(const SoftFailReport& report);

/// Fixed-point helpers shared by the renderers.
std::string fixed(double value, int decimals);
std::string scientific(double value, int digits);
std::string ns_as_seconds(Duration d);
std::string ns_as_us(std::int64_t ns);
std::string km_label(double length_m);

}  // namespace mst
