#pragma once

#include <cstdint>
#include <optional>

#include "mst/time.hpp"

namespace mst {

/// Raised by the monitoring controller toward the parent SDN controller.
struct DegradationEvent {
  std::uint64_t service_id = 0;
  SimTime t_detect;
  double snr_at_detect_db = 0.0;
  double ber_at_detect = 0.0;
  double fitted_slope_db_per_s = 0.0;
  std::optional<SimTime> predicted_t_fail;
};

}  // namespace mst
