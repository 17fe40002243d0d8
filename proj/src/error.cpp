#include "mst/error.hpp"

namespace mst {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SchedulingInPast: return "SchedulingInPast";
    case ErrorCode::RunawaySimulation: return "RunawaySimulation";
    case ErrorCode::TopologyInvalid: return "TopologyInvalid";
    case ErrorCode::NoPath: return "NoPath";
    case ErrorCode::IllegalTransition: return "IllegalTransition";
    case ErrorCode::RampConflict: return "RampConflict";
    case ErrorCode::PathNotOperational: return "PathNotOperational";
    case ErrorCode::PlacementFailed: return "PlacementFailed";
    case ErrorCode::ChannelExhausted: return "ChannelExhausted";
    case ErrorCode::TransponderUnavailable: return "TransponderUnavailable";
    case ErrorCode::IncompleteRecord: return "IncompleteRecord";
    case ErrorCode::NoAlternatePath: return "NoAlternatePath";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::Underdetermined: return "Underdetermined";
    case ErrorCode::OutOfOrderSample: return "OutOfOrderSample";
    case ErrorCode::DetectionTooLate: return "DetectionTooLate";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
  }
  return "Unknown";
}

}  // namespace mst
