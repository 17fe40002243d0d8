#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mst/time.hpp"

namespace mst {

struct NodeId {
  std::string name;

  auto operator<=>(const NodeId&) const = default;
};

/// Integer slot on the channel grid.
struct ChannelId {
  int index = 0;

  auto operator<=>(const ChannelId&) const = default;
};

inline constexpr int kDefaultGridSize = 96;
inline constexpr double kDefaultGroupIndex = 1.4680;

enum class Direction { Clockwise, CounterClockwise };

inline Direction reverse(Direction d) {
  return d == Direction::Clockwise ? Direction::CounterClockwise : Direction::Clockwise;
}

enum class BlockerState { Pass, Block };

/// Two-degree semi-filterless ROADM. Add and drop are splitter broadcasts; the
/// per-direction wavelength blocker on the through path is the only selective
/// element. A channel without an explicit entry is blocked.
struct RoadmNode {
  NodeId id;
  int degree = 2;
  std::array<std::map<int, BlockerState>, 2> blockers;  // indexed by Direction
  std::set<int> add_channels;
  std::vector<NodeId> drop_ports;

  BlockerState blocker(ChannelId ch, Direction through) const;
  bool provisioned(ChannelId ch, Direction through) const;
};

enum class TransponderState { Off, Configuring, LaserWarmup, Operational };

struct TransponderNode {
  NodeId id;
  NodeId attached_roadm;
  NodeId attached_switch;
  NodeId attached_compute;
  TransponderState state = TransponderState::Off;
  bool lifecycle_pending = false;
  double line_rate_bps = 100e9;
  std::string modulation = "DP-QPSK";
  Duration config_duration = from_seconds(2.0);
  Duration warmup_duration = from_seconds(125.0);

  /// Enforces Off -> Configuring -> LaserWarmup -> Operational and any -> Off.
  void transition(TransponderState to);
};

struct FiberLink {
  std::string id;
  NodeId a;
  NodeId b;
  double length_m = 0.0;
  double group_index = kDefaultGroupIndex;
  double base_attenuation_db = 0.0;
  double added_attenuation_db = 0.0;
  std::int64_t legacy_residual_delay_ns = 0;
};

struct AggSwitchNode {
  NodeId id;
  std::int64_t per_pass_latency_ns = 645;
};

struct ComputeNode {
  NodeId id;
  int vcpu_capacity = 0;
  int mem_capacity_mb = 0;
  NodeId attached_switch;
  int vcpu_used = 0;
  int mem_used_mb = 0;
};

struct OpticalPath {
  NodeId source;       // transponder
  NodeId destination;  // transponder
  std::vector<std::size_t> links;   // ring link indices, in traversal order
  std::vector<std::size_t> roadms;  // ring positions, source ROADM first
  std::optional<ChannelId> channel;
  Direction direction = Direction::Clockwise;

  bool operator==(const OpticalPath&) const = default;
};

struct PathMetrics {
  double total_length_m = 0.0;
  std::size_t hop_count = 0;
  double total_base_attenuation_db = 0.0;
};

// Declarative topology input, as read from the scenario file.
struct LinkSpec {
  std::string id;
  std::string a;
  std::string b;
  double length_m = 0.0;
  double group_index = kDefaultGroupIndex;
  double base_attenuation_db = 0.0;
  std::int64_t legacy_residual_delay_ns = 0;

  bool operator==(const LinkSpec&) const = default;
};

struct SwitchSpec {
  std::string id;
  std::int64_t per_pass_latency_ns = 645;

  bool operator==(const SwitchSpec&) const = default;
};

struct ComputeSpec {
  std::string id;
  int vcpu = 0;
  int mem_mb = 0;
  std::string attached_switch;

  bool operator==(const ComputeSpec&) const = default;
};

struct TransponderSpec {
  std::string id;
  std::string roadm;
  std::string attached_switch;
  std::string compute;
  double config_s = 2.0;
  double warmup_s = 125.0;

  bool operator==(const TransponderSpec&) const = default;
};

struct TopologySpec {
  std::vector<std::string> roadms;
  std::vector<SwitchSpec> switches;
  std::vector<ComputeSpec> compute;
  std::vector<TransponderSpec> transponders;
  std::vector<LinkSpec> links;
  int grid_size = kDefaultGridSize;

  bool operator==(const TopologySpec&) const = default;
};

/// Ring of ROADMs plus the access side hanging off it.
///
/// `roadms` is stored in ring order starting at the first declared ROADM and
/// `links[i]` joins `roadms[i]` to `roadms[(i + 1) % n]`; clockwise means
/// increasing ring position.
struct RingTopology {
  std::vector<RoadmNode> roadms;
  std::vector<FiberLink> links;
  std::vector<TransponderNode> transponders;
  std::vector<AggSwitchNode> switches;
  std::vector<ComputeNode> computes;
  int grid_size = kDefaultGridSize;

  std::size_t ring_size() const { return roadms.size(); }
  std::size_t roadm_position(const NodeId& id) const;
  std::size_t link_index(const std::string& id) const;
  /// Ring link between two adjacent positions, walking in `dir` from `from`.
  std::size_t link_from(std::size_t from, Direction dir) const;
  std::size_t next_position(std::size_t pos, Direction dir) const;

  TransponderNode& transponder(const NodeId& id);
  const TransponderNode& transponder(const NodeId& id) const;
  ComputeNode& compute(const NodeId& id);
  const ComputeNode& compute(const NodeId& id) const;
  const AggSwitchNode& aggregation_switch(const NodeId& id) const;
  bool has_transponder(const NodeId& id) const;
  bool has_compute(const NodeId& id) const;
};

/// Throws Error(TopologyInvalid) unless the ROADMs and their links form exactly
/// one cycle of at least three nodes and every attachment resolves.
RingTopology build_ring(const TopologySpec& spec);

/// Both arcs between two transponders' ROADMs, shortest first (clockwise on a
/// tie). Channel is left unset. Throws Error(NoPath) when both sit on the same
/// ROADM.
std::vector<OpticalPath> find_ring_paths(const NodeId& a, const NodeId& b, const RingTopology& topo);

/// The opposite arc between the same endpoints.
OpticalPath alternate_arc(const OpticalPath& path, const RingTopology& topo);

PathMetrics path_metrics(const OpticalPath& path, const RingTopology& topo);

}  // namespace mst
