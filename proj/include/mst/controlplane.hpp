#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mst/alerts.hpp"
#include "mst/error.hpp"
#include "mst/optics.hpp"
#include "mst/rng.hpp"
#include "mst/simkernel.hpp"
#include "mst/topology.hpp"

namespace mst {

using ServiceId = std::uint64_t;

struct VnfDescriptor {
  std::string name;
  int vcpu = 4;
  int mem_mb = 8192;
  double instantiation_s = 40.0;
  double instantiation_cv = 0.05;
  std::string target_compute;

  bool operator==(const VnfDescriptor&) const = default;
};

/// Durations of the control-plane legs. Every value is a scenario key.
struct ControlTiming {
  double hop_latency_s = 0.1;         // one message between controller layers
  double path_computation_s = 1.7;    // parent controller planning
  double roadm_config_s = 2.0;        // per ROADM, configured one after another
  double roadm_config_cv = 0.02;
  double transponder_cv = 0.02;       // applied to config and warm-up
  double probe_verify_s = 2.0;
  double retune_s = 2.0;
  bool jitter = true;

  bool operator==(const ControlTiming&) const = default;
};

struct NsDescriptor {
  std::string name = "video-surveillance";
  std::vector<VnfDescriptor> vnfs;
  std::array<std::string, 2> endpoints;
  double bandwidth_bps = 100e9;
  std::int64_t max_rt_latency_ns = 800'000;
  double telemetry_period_s = 1.0;
  bool latency_probe = true;

  bool operator==(const NsDescriptor&) const = default;
};

enum class ServiceStatus { Deploying, Active, Degraded, Restored, Failed, TornDown };

std::string_view to_string(ServiceStatus s);

struct ServiceTimestamps {
  std::optional<SimTime> request;
  std::optional<SimTime> vnfs_started;
  std::optional<SimTime> vnfs_ready;
  std::optional<SimTime> conn_requested;
  std::optional<SimTime> roadms_configured;
  std::optional<SimTime> transponders_configured;
  std::optional<SimTime> path_operational;
  std::optional<SimTime> probe_verified;
  std::optional<SimTime> monitoring_active;

  /// The stamps in workflow order; unset entries are nullopt.
  std::array<std::optional<SimTime>, 9> ordered() const {
    return {request,           vnfs_started,          vnfs_ready,
            conn_requested,    roadms_configured,     transponders_configured,
            path_operational,  probe_verified,        monitoring_active};
  }
};

struct VnfPlacement {
  std::string vnf;
  NodeId compute;
  int vcpu = 0;
  int mem_mb = 0;
};

struct ServiceRecord {
  ServiceId request_id = 0;
  std::string name;
  ServiceTimestamps ts;
  std::optional<OpticalPath> path;
  std::vector<VnfPlacement> placements;
  ServiceStatus status = ServiceStatus::Deploying;
  std::optional<ErrorCode> failure;
  std::array<NodeId, 2> endpoints;
  /// Transponder configuration plus laser warm-up as executed (slower end).
  Duration transponder_phase{0};
};

struct KpiReport {
  Duration ns_deploy{0};
  Duration connectivity{0};
  Duration e2e{0};
  Duration e2e_excl_transponder{0};

  bool operator==(const KpiReport&) const = default;
};

/// Throws Error(IncompleteRecord) unless the service reached Active.
KpiReport compute_kpis(const ServiceRecord& rec);

struct ConnectivityIntent {
  std::array<NodeId, 2> endpoints;
  std::optional<ChannelId> channel;
  std::optional<OpticalPath> path;
  ServiceId requester = 0;
};

struct RestorationOutcome {
  enum class Kind { Restored, Failed };
  Kind kind = Kind::Failed;
  SimTime at;
  std::optional<ErrorCode> reason;
};

enum class RoadmRole { Add, Drop, Pass, Block };

/// Writes one blocker entry. Add and Drop block the through direction (the
/// signal enters or leaves here); Add also marks the channel as locally added.
/// Idempotent.
void configure_roadm_channel(RoadmNode& roadm, ChannelId channel, Direction through, RoadmRole role);

/// Per-ROADM blocker settings that carry a duplex lightpath along `path`.
struct RoadmStep {
  std::size_t position;
  std::vector<std::pair<Direction, RoadmRole>> settings;
};
/// Source, intermediate and destination ROADMs of the path in order, then the
/// off-path ROADMs with the channel blocked both ways.
std::vector<RoadmStep> provisioning_plan(const OpticalPath& path, const RingTopology& topo);
std::vector<RoadmStep> release_plan(const OpticalPath& path);

/// Traverses every added channel through the splitter/blocker graph in both
/// directions. Returns false if any signal reaches its origin ROADM again or a
/// channel passes every blocker in one direction.
bool light_loop_free(const RingTopology& topo);

/// Tracks which service holds each (link, channel).
class ChannelPlan {
 public:
  bool is_free(const OpticalPath& path, ChannelId ch, std::optional<ServiceId> ignoring = {}) const;
  std::optional<ChannelId> lowest_free(const OpticalPath& path, int grid_size) const;
  void claim(const OpticalPath& path, ChannelId ch, ServiceId owner);
  void release(const OpticalPath& path, ChannelId ch, ServiceId owner);
  std::size_t size() const { return owners_.size(); }

 private:
  std::map<std::pair<std::size_t, int>, ServiceId> owners_;
};

/// Compute side: capacity bookkeeping for the edge nodes.
class Vim {
 public:
  explicit Vim(RingTopology& topo) : topo_(topo) {}

  /// Places every VNF or none (Error(PlacementFailed)).
  std::vector<VnfPlacement> place(const std::vector<VnfDescriptor>& vnfs);
  void release(const std::vector<VnfPlacement>& placements);

  struct Instantiation {
    std::vector<VnfPlacement> placements;
    SimTime ready_at;
  };

  /// Places the VNFs and boots them in parallel; `on_ready` fires when the
  /// slowest one is up.
  Instantiation instantiate(const std::vector<VnfDescriptor>& vnfs, Kernel& kernel, CounterRng& rng,
                            bool jitter, std::function<void(SimTime)> on_ready);

 private:
  RingTopology& topo_;
};

/// Open Line System driver: configures ROADMs one after another.
class OlsDriver {
 public:
  OlsDriver(RingTopology& topo, Kernel& kernel, const ControlTiming& timing, CounterRng rng)
      : topo_(topo), kernel_(kernel), timing_(timing), rng_(rng) {}

  /// Applies `steps` sequentially, each taking one ROADM configuration time.
  /// Setting `*abort` stops the sequence before its next step.
  void run(std::vector<RoadmStep> steps, ChannelId channel, std::function<void(SimTime)> on_done,
           std::shared_ptr<const bool> abort = nullptr);

 private:
  struct Sequence {
    std::vector<RoadmStep> steps;
    std::size_t next = 0;
    ChannelId channel;
    std::function<void(SimTime)> on_done;
    std::shared_ptr<const bool> abort;
  };

  void advance(std::shared_ptr<Sequence> seq);
  Duration step_duration();

  RingTopology& topo_;
  Kernel& kernel_;
  const ControlTiming& timing_;
  CounterRng rng_;
};

/// OpenConfig-side driver for the coherent transponders.
class TransponderDriver {
 public:
  TransponderDriver(RingTopology& topo, Kernel& kernel, const ControlTiming& timing, CounterRng rng)
      : topo_(topo), kernel_(kernel), timing_(timing), rng_(rng) {}

  /// Cold start of both ends in parallel. Calls on_configured when both have
  /// finished configuration and on_operational when both lasers are stable.
  void bring_up(const std::array<NodeId, 2>& ends, std::function<void(SimTime)> on_configured,
                std::function<void(SimTime)> on_operational);

  /// Retunes already-warm transponders; no warm-up is repeated.
  EventId retune(const std::array<NodeId, 2>& ends, std::function<void(SimTime)> on_done);

  void shut_down(const std::array<NodeId, 2>& ends);

 private:
  RingTopology& topo_;
  Kernel& kernel_;
  const ControlTiming& timing_;
  CounterRng rng_;
};

/// The whole control hierarchy for one run: NFV orchestrator with its VIM,
/// parent SDN controller, optical controller with OLS and transponder drivers.
/// Every leg is a kernel event; nothing here blocks.
class ControlPlane {
 public:
  using CompletionFn = std::function<void(const ServiceRecord&)>;
  using OutcomeFn = std::function<void(const RestorationOutcome&)>;

  ControlPlane(RingTopology& topo, Kernel& kernel, ControlTiming timing, CounterRng rng);

  ControlPlane(const ControlPlane&) = delete;
  ControlPlane& operator=(const ControlPlane&) = delete;

  /// Starts the service workflow at now(). `on_complete` fires once the record
  /// is Active or Failed.
  ServiceId request_network_service(const NsDescriptor& ns, CompletionFn on_complete = {});

  /// Moves the service to the opposite ring arc on the same channel. The
  /// outcome is Restored if the new path carries traffic before
  /// `fail_crossing`, Failed (at the crossing) otherwise.
  void handle_degradation_alert(const DegradationEvent& alert, SimTime fail_crossing, OutcomeFn on_outcome = {});

  void teardown(ServiceId id);

  const ServiceRecord& record(ServiceId id) const { return records_.at(id); }
  const std::map<ServiceId, ServiceRecord>& records() const { return records_; }
  const ChannelPlan& channels() const { return channels_; }
  const RingTopology& topology() const { return topo_; }
  const ControlTiming& timing() const { return timing_; }

 private:
  void set_status(ServiceRecord& rec, ServiceStatus to);
  void release_resources(ServiceRecord& rec);
  void fail(ServiceId id, ErrorCode code, const CompletionFn& done);
  void setup_connectivity(ConnectivityIntent intent, const CompletionFn& done);
  Duration hop() const { return from_seconds(timing_.hop_latency_s); }

  RingTopology& topo_;
  Kernel& kernel_;
  ControlTiming timing_;
  CounterRng vnf_rng_;
  Vim vim_;
  OlsDriver ols_;
  TransponderDriver tp_driver_;
  ChannelPlan channels_;
  std::set<NodeId> busy_transponders_;
  std::map<ServiceId, ServiceRecord> records_;
  ServiceId next_id_ = 1;
};

/// True iff no link carries two live services on the same channel, judged from
/// the service records alone.
bool channels_exclusive(const ControlPlane& cp);

/// Requests the service and drains the kernel; returns the final record.
ServiceRecord deploy_service(ControlPlane& cp, Kernel& kernel, const NsDescriptor& ns);

}  // namespace mst
