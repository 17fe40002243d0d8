#include "mst/controlplane.hpp"

#include <algorithm>
#include <memory>

namespace mst {

namespace {

std::size_t dir_slot(Direction d) { return d == Direction::Clockwise ? 0 : 1; }

bool live(const ServiceRecord& rec) {
  return rec.status != ServiceStatus::TornDown && rec.status != ServiceStatus::Failed;
}

}  // namespace

std::string_view to_string(ServiceStatus s) {
  switch (s) {
    case ServiceStatus::Deploying: return "Deploying";
    case ServiceStatus::Active: return "Active";
    case ServiceStatus::Degraded: return "Degraded";
    case ServiceStatus::Restored: return "Restored";
    case ServiceStatus::Failed: return "Failed";
    case ServiceStatus::TornDown: return "TornDown";
  }
  return "Unknown";
}

KpiReport compute_kpis(const ServiceRecord& rec) {
  const auto& ts = rec.ts;
  if (!ts.monitoring_active || !ts.request || !ts.vnfs_started || !ts.vnfs_ready || !ts.conn_requested ||
      !ts.path_operational) {
    throw Error(ErrorCode::IncompleteRecord,
                "service " + std::to_string(rec.request_id) + " never reached Active");
  }
  KpiReport k;
  k.ns_deploy = *ts.vnfs_ready - *ts.vnfs_started;
  k.connectivity = *ts.path_operational - *ts.conn_requested;
  k.e2e = *ts.monitoring_active - *ts.request;
  k.e2e_excl_transponder = k.e2e - rec.transponder_phase;
  return k;
}

// ---------------------------------------------------------------------------
// ROADM blockers

void configure_roadm_channel(RoadmNode& roadm, ChannelId channel, Direction through, RoadmRole role) {
  auto& entry = roadm.blockers[dir_slot(through)][channel.index];
  switch (role) {
    case RoadmRole::Add:
      roadm.add_channels.insert(channel.index);
      entry = BlockerState::Block;
      break;
    case RoadmRole::Drop:
    case RoadmRole::Block:
      entry = BlockerState::Block;
      break;
    case RoadmRole::Pass:
      entry = BlockerState::Pass;
      break;
  }
}

std::vector<RoadmStep> provisioning_plan(const OpticalPath& path, const RingTopology& topo) {
  const Direction fwd = path.direction;
  const Direction rev = reverse(fwd);
  std::vector<RoadmStep> steps;
  for (std::size_t i = 0; i < path.roadms.size(); ++i) {
    RoadmStep step{path.roadms[i], {}};
    if (i == 0)
      step.settings = {{fwd, RoadmRole::Add}, {rev, RoadmRole::Drop}};
    else if (i + 1 == path.roadms.size())
      step.settings = {{fwd, RoadmRole::Drop}, {rev, RoadmRole::Add}};
    else
      step.settings = {{fwd, RoadmRole::Pass}, {rev, RoadmRole::Pass}};
    steps.push_back(std::move(step));
  }
  // Off-path ROADMs still see the broadcast and must block it explicitly.
  if (path.roadms.empty()) return steps;
  for (std::size_t pos = topo.next_position(path.roadms.back(), fwd); pos != path.roadms.front();
       pos = topo.next_position(pos, fwd)) {
    steps.push_back({pos, {{fwd, RoadmRole::Block}, {rev, RoadmRole::Block}}});
  }
  return steps;
}

std::vector<RoadmStep> release_plan(const OpticalPath& path) {
  std::vector<RoadmStep> steps;
  for (std::size_t pos : path.roadms)
    steps.push_back({pos, {{Direction::Clockwise, RoadmRole::Block}, {Direction::CounterClockwise, RoadmRole::Block}}});
  return steps;
}

namespace {

void apply_step(RingTopology& topo, const RoadmStep& step, ChannelId ch) {
  auto& roadm = topo.roadms.at(step.position);
  for (const auto& [dir, role] : step.settings) configure_roadm_channel(roadm, ch, dir, role);
}

void drop_add_if_released(RingTopology& topo, const RoadmStep& step, ChannelId ch) {
  auto& roadm = topo.roadms.at(step.position);
  if (roadm.blocker(ch, Direction::Clockwise) == BlockerState::Block &&
      std::all_of(step.settings.begin(), step.settings.end(),
                  [](const auto& s) { return s.second == RoadmRole::Block; }))
    roadm.add_channels.erase(ch.index);
}

}  // namespace

bool light_loop_free(const RingTopology& topo) {
  const std::size_t n = topo.ring_size();
  std::set<int> channels;
  for (const auto& r : topo.roadms) {
    channels.insert(r.add_channels.begin(), r.add_channels.end());
    for (const auto& table : r.blockers)
      for (const auto& [ch, _] : table) channels.insert(ch);
  }
  for (int c : channels) {
    const ChannelId ch{c};
    for (Direction dir : {Direction::Clockwise, Direction::CounterClockwise}) {
      // A ring where every blocker passes the channel circulates light forever.
      bool all_pass = true;
      for (const auto& r : topo.roadms) all_pass = all_pass && r.blocker(ch, dir) == BlockerState::Pass;
      if (all_pass) return false;

      for (std::size_t origin = 0; origin < n; ++origin) {
        if (!topo.roadms[origin].add_channels.contains(c)) continue;
        std::size_t pos = topo.next_position(origin, dir);
        for (std::size_t hops = 0; hops < n; ++hops) {
          if (pos == origin) return false;
          if (topo.roadms[pos].blocker(ch, dir) != BlockerState::Pass) break;
          pos = topo.next_position(pos, dir);
        }
      }
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// ChannelPlan

bool ChannelPlan::is_free(const OpticalPath& path, ChannelId ch, std::optional<ServiceId> ignoring) const {
  for (std::size_t link : path.links) {
    auto it = owners_.find({link, ch.index});
    if (it != owners_.end() && (!ignoring || it->second != *ignoring)) return false;
  }
  return true;
}

std::optional<ChannelId> ChannelPlan::lowest_free(const OpticalPath& path, int grid_size) const {
  for (int c = 0; c < grid_size; ++c)
    if (is_free(path, ChannelId{c})) return ChannelId{c};
  return std::nullopt;
}

void ChannelPlan::claim(const OpticalPath& path, ChannelId ch, ServiceId owner) {
  if (!is_free(path, ch, owner)) throw Error(ErrorCode::ChannelExhausted, "channel already in use on path");
  for (std::size_t link : path.links) owners_[{link, ch.index}] = owner;
}

void ChannelPlan::release(const OpticalPath& path, ChannelId ch, ServiceId owner) {
  for (std::size_t link : path.links) {
    auto it = owners_.find({link, ch.index});
    if (it != owners_.end() && it->second == owner) owners_.erase(it);
  }
}

// ---------------------------------------------------------------------------
// Vim

std::vector<VnfPlacement> Vim::place(const std::vector<VnfDescriptor>& vnfs) {
  std::map<std::string, std::pair<int, int>> demand;
  for (const auto& v : vnfs) {
    if (v.vcpu <= 0 || v.mem_mb <= 0) throw Error(ErrorCode::PlacementFailed, "VNF " + v.name + " has no demand");
    if (!topo_.has_compute(NodeId{v.target_compute}))
      throw Error(ErrorCode::PlacementFailed, "VNF " + v.name + " targets unknown node " + v.target_compute);
    demand[v.target_compute].first += v.vcpu;
    demand[v.target_compute].second += v.mem_mb;
  }
  for (const auto& [node, need] : demand) {
    const auto& c = topo_.compute(NodeId{node});
    if (c.vcpu_used + need.first > c.vcpu_capacity || c.mem_used_mb + need.second > c.mem_capacity_mb)
      throw Error(ErrorCode::PlacementFailed, "insufficient capacity on " + node);
  }
  std::vector<VnfPlacement> out;
  for (const auto& v : vnfs) {
    auto& c = topo_.compute(NodeId{v.target_compute});
    c.vcpu_used += v.vcpu;
    c.mem_used_mb += v.mem_mb;
    out.push_back({v.name, c.id, v.vcpu, v.mem_mb});
  }
  return out;
}

void Vim::release(const std::vector<VnfPlacement>& placements) {
  for (const auto& p : placements) {
    auto& c = topo_.compute(p.compute);
    c.vcpu_used -= p.vcpu;
    c.mem_used_mb -= p.mem_mb;
  }
}

Vim::Instantiation Vim::instantiate(const std::vector<VnfDescriptor>& vnfs, Kernel& kernel, CounterRng& rng,
                                    bool jitter, std::function<void(SimTime)> on_ready) {
  Instantiation inst{place(vnfs), kernel.now()};
  for (const auto& v : vnfs) {
    const double seconds = jitter ? rng.lognormal(v.instantiation_s, v.instantiation_cv) : v.instantiation_s;
    inst.ready_at = std::max(inst.ready_at, kernel.now() + from_seconds(seconds));
  }
  kernel.schedule(inst.ready_at, "vim.vnfs_ready", [cb = std::move(on_ready)](Kernel& k) {
    if (cb) cb(k.now());
  });
  return inst;
}

// ---------------------------------------------------------------------------
// Drivers

Duration OlsDriver::step_duration() {
  const double cv = timing_.jitter ? timing_.roadm_config_cv : 0.0;
  return from_seconds(rng_.lognormal(timing_.roadm_config_s, cv));
}

void OlsDriver::run(std::vector<RoadmStep> steps, ChannelId channel, std::function<void(SimTime)> on_done,
                    std::shared_ptr<const bool> abort) {
  advance(std::make_shared<Sequence>(Sequence{std::move(steps), 0, channel, std::move(on_done), std::move(abort)}));
}

void OlsDriver::advance(std::shared_ptr<Sequence> seq) {
  if (seq->abort && *seq->abort) return;
  if (seq->next == seq->steps.size()) {
    if (seq->on_done) seq->on_done(kernel_.now());
    return;
  }
  kernel_.schedule_in(step_duration(), "ols.roadm_configured", [this, seq](Kernel&) {
    if (seq->abort && *seq->abort) return;
    const auto& step = seq->steps[seq->next++];
    apply_step(topo_, step, seq->channel);
    drop_add_if_released(topo_, step, seq->channel);
    advance(seq);
  });
}

void TransponderDriver::bring_up(const std::array<NodeId, 2>& ends, std::function<void(SimTime)> on_configured,
                                 std::function<void(SimTime)> on_operational) {
  const double cv = timing_.jitter ? timing_.transponder_cv : 0.0;
  auto remaining = std::make_shared<int>(static_cast<int>(ends.size()));
  auto done = std::make_shared<std::function<void(SimTime)>>(std::move(on_operational));
  SimTime configured = kernel_.now();
  for (const auto& id : ends) {
    auto& tp = topo_.transponder(id);
    const auto durations = sample_lifecycle(tp, cv, rng_);
    const auto sched = transponder_lifecycle(kernel_, tp, kernel_.now(), durations, [remaining, done](SimTime t) {
      if (--*remaining == 0 && *done) (*done)(t);
    });
    configured = std::max(configured, sched.warmup_at);
  }
  kernel_.schedule(configured, "tp.both_configured", [cb = std::move(on_configured)](Kernel& k) {
    if (cb) cb(k.now());
  });
}

EventId TransponderDriver::retune(const std::array<NodeId, 2>& ends, std::function<void(SimTime)> on_done) {
  for (const auto& id : ends) {
    if (topo_.transponder(id).state != TransponderState::Operational)
      throw Error(ErrorCode::TransponderUnavailable, "cannot retune " + id.name + " before it is Operational");
  }
  return kernel_.schedule_in(from_seconds(timing_.retune_s), "tp.retuned", [cb = std::move(on_done)](Kernel& k) {
    if (cb) cb(k.now());
  });
}

void TransponderDriver::shut_down(const std::array<NodeId, 2>& ends) {
  for (const auto& id : ends) {
    auto& tp = topo_.transponder(id);
    tp.transition(TransponderState::Off);
    tp.lifecycle_pending = false;
  }
}

// ---------------------------------------------------------------------------
// ControlPlane

ControlPlane::ControlPlane(RingTopology& topo, Kernel& kernel, ControlTiming timing, CounterRng rng)
    : topo_(topo),
      kernel_(kernel),
      timing_(timing),
      vnf_rng_(rng.split(1)),
      vim_(topo),
      ols_(topo, kernel, timing_, rng.split(2)),
      tp_driver_(topo, kernel, timing_, rng.split(3)) {}

void ControlPlane::set_status(ServiceRecord& rec, ServiceStatus to) {
  using S = ServiceStatus;
  const S from = rec.status;
  const bool ok = (from == S::Deploying && (to == S::Active || to == S::Failed)) ||
                  (from == S::Active && (to == S::Degraded || to == S::TornDown)) ||
                  (from == S::Degraded && (to == S::Restored || to == S::Failed || to == S::TornDown)) ||
                  (from == S::Restored && (to == S::Degraded || to == S::TornDown)) ||
                  (from == S::Failed && to == S::TornDown);
  if (!ok) {
    throw Error(ErrorCode::IllegalTransition, "service " + std::to_string(rec.request_id) + ": " +
                                                  std::string(to_string(from)) + " -> " +
                                                  std::string(to_string(to)));
  }
  rec.status = to;
}

void ControlPlane::release_resources(ServiceRecord& rec) {
  vim_.release(rec.placements);
  rec.placements.clear();
  if (rec.path && rec.path->channel) {
    channels_.release(*rec.path, *rec.path->channel, rec.request_id);
    for (const auto& step : release_plan(*rec.path)) apply_step(topo_, step, *rec.path->channel);
    for (const auto& step : release_plan(*rec.path)) drop_add_if_released(topo_, step, *rec.path->channel);
  }
  for (const auto& end : rec.endpoints) busy_transponders_.erase(end);
}

void ControlPlane::fail(ServiceId id, ErrorCode code, const CompletionFn& done) {
  auto& rec = records_.at(id);
  rec.failure = code;
  release_resources(rec);
  set_status(rec, ServiceStatus::Failed);
  if (done) done(rec);
}

ServiceId ControlPlane::request_network_service(const NsDescriptor& ns, CompletionFn on_complete) {
  const ServiceId id = next_id_++;
  auto& rec = records_[id];
  rec.request_id = id;
  rec.name = ns.name;
  rec.endpoints = {NodeId{ns.endpoints[0]}, NodeId{ns.endpoints[1]}};
  rec.ts.request = kernel_.now();

  if (!topo_.has_transponder(rec.endpoints[0]) || !topo_.has_transponder(rec.endpoints[1]) ||
      rec.endpoints[0] == rec.endpoints[1]) {
    fail(id, ErrorCode::TransponderUnavailable, on_complete);
    return id;
  }

  rec.ts.vnfs_started = kernel_.now();
  auto done = std::make_shared<CompletionFn>(std::move(on_complete));
  try {
    auto inst = vim_.instantiate(ns.vnfs, kernel_, vnf_rng_, timing_.jitter, [this, id, done](SimTime t) {
      auto& r = records_.at(id);
      r.ts.vnfs_ready = t;
      r.ts.conn_requested = t;
      ConnectivityIntent intent{r.endpoints, std::nullopt, std::nullopt, id};
      // orchestrator -> parent controller, path computation, parent -> optical controller
      kernel_.schedule_in(hop(), "parent.intent_received", [this, intent, done](Kernel&) {
        kernel_.schedule_in(from_seconds(timing_.path_computation_s), "parent.path_computed",
                            [this, intent, done](Kernel&) {
                              ConnectivityIntent routed = intent;
                              try {
                                routed.path = find_ring_paths(intent.endpoints[0], intent.endpoints[1], topo_).front();
                              } catch (const Error& e) {
                                fail(intent.requester, e.code(), *done);
                                return;
                              }
                              kernel_.schedule_in(hop(), "optical.intent_received", [this, routed, done](Kernel&) {
                                setup_connectivity(routed, *done);
                              });
                            });
      });
    });
    rec.placements = std::move(inst.placements);
  } catch (const Error& e) {
    fail(id, e.code(), *done);
  }
  return id;
}

void ControlPlane::setup_connectivity(ConnectivityIntent intent, const CompletionFn& done) {
  const ServiceId id = intent.requester;
  for (const auto& end : intent.endpoints) {
    if (busy_transponders_.contains(end) || topo_.transponder(end).state != TransponderState::Off ||
        topo_.transponder(end).lifecycle_pending) {
      fail(id, ErrorCode::TransponderUnavailable, done);
      return;
    }
  }
  OpticalPath path = *intent.path;
  const auto channel = channels_.lowest_free(path, topo_.grid_size);
  if (!channel) {
    fail(id, ErrorCode::ChannelExhausted, done);
    return;
  }
  path.channel = channel;
  channels_.claim(path, *channel, id);
  for (const auto& end : intent.endpoints) busy_transponders_.insert(end);
  records_.at(id).path = path;

  kernel_.schedule_in(hop(), "ols.request_received", [this, id, path, done](Kernel&) {
    ols_.run(provisioning_plan(path, topo_), *path.channel, [this, id, done](SimTime t) {
      auto& r = records_.at(id);
      r.ts.roadms_configured = t;
      tp_driver_.bring_up(
          r.endpoints, [this, id](SimTime tc) { records_.at(id).ts.transponders_configured = tc; },
          [this, id, done](SimTime top) {
            auto& rr = records_.at(id);
            rr.ts.path_operational = top;
            rr.transponder_phase = top - *rr.ts.roadms_configured;
            kernel_.schedule_in(from_seconds(timing_.probe_verify_s), "probe.verified", [this, id, done](Kernel& k) {
              auto& r3 = records_.at(id);
              r3.ts.probe_verified = k.now();
              r3.ts.monitoring_active = k.now();
              set_status(r3, ServiceStatus::Active);
              if (done) done(r3);
            });
          });
    });
  });
}

void ControlPlane::handle_degradation_alert(const DegradationEvent& alert, SimTime fail_crossing,
                                            OutcomeFn on_outcome) {
  const ServiceId id = alert.service_id;
  auto& rec = records_.at(id);
  if (!rec.path || !rec.path->channel)
    throw Error(ErrorCode::PathNotOperational, "service " + std::to_string(id) + " has no lightpath");
  set_status(rec, ServiceStatus::Degraded);

  struct Restoration {
    bool settled = false;
    std::shared_ptr<bool> abort = std::make_shared<bool>(false);
    EventId deadline = 0;
    std::optional<ErrorCode> reason;
    std::optional<OpticalPath> claimed;
  };
  auto st = std::make_shared<Restoration>();
  auto settle = [this, id, st, cb = std::move(on_outcome)](RestorationOutcome::Kind kind, SimTime at) {
    if (st->settled) return;
    st->settled = true;
    *st->abort = true;
    kernel_.cancel(st->deadline);
    auto& r = records_.at(id);
    if (kind == RestorationOutcome::Kind::Failed) {
      if (st->claimed) channels_.release(*st->claimed, *st->claimed->channel, id);
      r.failure = st->reason;
      release_resources(r);
      tp_driver_.shut_down(r.endpoints);
      set_status(r, ServiceStatus::Failed);
    } else {
      set_status(r, ServiceStatus::Restored);
    }
    if (cb) cb(RestorationOutcome{kind, at, st->reason});
  };

  if (fail_crossing <= kernel_.now()) {
    settle(RestorationOutcome::Kind::Failed, fail_crossing);
    return;
  }
  st->deadline = kernel_.schedule(fail_crossing, "cp.fail_deadline", [settle](Kernel& k) {
    settle(RestorationOutcome::Kind::Failed, k.now());
  });

  const OpticalPath old_path = *rec.path;
  // MDA -> parent controller, path computation, parent -> optical, optical -> OLS
  kernel_.schedule_in(hop(), "parent.alert_received", [this, id, st, settle, old_path](Kernel&) {
    kernel_.schedule_in(from_seconds(timing_.path_computation_s), "parent.restoration_computed",
                        [this, id, st, settle, old_path](Kernel&) {
      if (st->settled) return;
      OpticalPath alt = alternate_arc(old_path, topo_);
      alt.channel = old_path.channel;
      kernel_.schedule_in(hop(), "optical.restoration_received", [this, id, st, settle, old_path, alt](Kernel&) {
        if (st->settled) return;
        if (!channels_.is_free(alt, *alt.channel, id)) {
          st->reason = ErrorCode::NoAlternatePath;
          return;  // the deadline settles the outcome
        }
        channels_.claim(alt, *alt.channel, id);
        st->claimed = alt;
        kernel_.schedule_in(hop(), "ols.restoration_received", [this, id, st, settle, old_path, alt](Kernel&) {
          if (st->settled) return;
          ols_.run(
              provisioning_plan(alt, topo_), *alt.channel,
              [this, id, st, settle, old_path, alt](SimTime) {
                if (st->settled) return;
                tp_driver_.retune(records_.at(id).endpoints, [this, id, st, settle, old_path, alt](SimTime t) {
                  if (st->settled) return;
                  channels_.release(old_path, *old_path.channel, id);
                  records_.at(id).path = alt;
                  st->claimed.reset();
                  // Old-arc intermediates are no longer on the lightpath.
                  for (const auto& step : release_plan(old_path)) {
                    if (step.position == old_path.roadms.front() || step.position == old_path.roadms.back())
                      continue;
                    apply_step(topo_, step, *old_path.channel);
                  }
                  settle(RestorationOutcome::Kind::Restored, t);
                });
              },
              st->abort);
        });
      });
    });
  });
}

void ControlPlane::teardown(ServiceId id) {
  auto& rec = records_.at(id);
  if (rec.status == ServiceStatus::TornDown) return;
  if (rec.status != ServiceStatus::Failed) {
    release_resources(rec);
    tp_driver_.shut_down(rec.endpoints);
  }
  set_status(rec, ServiceStatus::TornDown);
}

bool channels_exclusive(const ControlPlane& cp) {
  std::map<std::pair<std::size_t, int>, int> users;
  for (const auto& [id, rec] : cp.records()) {
    if (!live(rec) || !rec.path || !rec.path->channel) continue;
    for (std::size_t link : rec.path->links)
      if (++users[{link, rec.path->channel->index}] > 1) return false;
  }
  return true;
}

ServiceRecord deploy_service(ControlPlane& cp, Kernel& kernel, const NsDescriptor& ns) {
  const ServiceId id = cp.request_network_service(ns);
  kernel.run_to_end();
  return cp.record(id);
}

}  // namespace mst
