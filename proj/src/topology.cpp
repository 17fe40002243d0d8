#include "mst/topology.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <utility>

#include "mst/error.hpp"

namespace mst {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::TopologyInvalid, what); }

std::size_t dir_slot(Direction d) { return d == Direction::Clockwise ? 0 : 1; }

OpticalPath make_arc(const NodeId& src, const NodeId& dst, std::size_t from, std::size_t to,
                     Direction dir, const RingTopology& topo) {
  OpticalPath path;
  path.source = src;
  path.destination = dst;
  path.direction = dir;
  std::size_t pos = from;
  path.roadms.push_back(pos);
  while (pos != to) {
    path.links.push_back(topo.link_from(pos, dir));
    pos = topo.next_position(pos, dir);
    path.roadms.push_back(pos);
  }
  return path;
}

}  // namespace

BlockerState RoadmNode::blocker(ChannelId ch, Direction through) const {
  const auto& table = blockers[dir_slot(through)];
  auto it = table.find(ch.index);
  return it == table.end() ? BlockerState::Block : it->second;
}

bool RoadmNode::provisioned(ChannelId ch, Direction through) const {
  return blockers[dir_slot(through)].contains(ch.index);
}

void TransponderNode::transition(TransponderState to) {
  using S = TransponderState;
  const bool ok = to == S::Off || (state == S::Off && to == S::Configuring) ||
                  (state == S::Configuring && to == S::LaserWarmup) ||
                  (state == S::LaserWarmup && to == S::Operational);
  if (!ok) {
    throw Error(ErrorCode::IllegalTransition, "transponder " + id.name + " cannot move from state " +
                                                  std::to_string(static_cast<int>(state)) + " to " +
                                                  std::to_string(static_cast<int>(to)));
  }
  state = to;
}

std::size_t RingTopology::roadm_position(const NodeId& id) const {
  for (std::size_t i = 0; i < roadms.size(); ++i)
    if (roadms[i].id == id) return i;
  invalid("unknown ROADM " + id.name);
}

std::size_t RingTopology::link_index(const std::string& id) const {
  for (std::size_t i = 0; i < links.size(); ++i)
    if (links[i].id == id) return i;
  invalid("unknown link " + id);
}

std::size_t RingTopology::next_position(std::size_t pos, Direction dir) const {
  const std::size_t n = roadms.size();
  return dir == Direction::Clockwise ? (pos + 1) % n : (pos + n - 1) % n;
}

std::size_t RingTopology::link_from(std::size_t from, Direction dir) const {
  return dir == Direction::Clockwise ? from : next_position(from, dir);
}

TransponderNode& RingTopology::transponder(const NodeId& id) {
  return const_cast<TransponderNode&>(std::as_const(*this).transponder(id));
}

const TransponderNode& RingTopology::transponder(const NodeId& id) const {
  for (const auto& t : transponders)
    if (t.id == id) return t;
  invalid("unknown transponder " + id.name);
}

ComputeNode& RingTopology::compute(const NodeId& id) {
  return const_cast<ComputeNode&>(std::as_const(*this).compute(id));
}

const ComputeNode& RingTopology::compute(const NodeId& id) const {
  for (const auto& c : computes)
    if (c.id == id) return c;
  invalid("unknown compute node " + id.name);
}

const AggSwitchNode& RingTopology::aggregation_switch(const NodeId& id) const {
  for (const auto& s : switches)
    if (s.id == id) return s;
  invalid("unknown switch " + id.name);
}

bool RingTopology::has_transponder(const NodeId& id) const {
  return std::any_of(transponders.begin(), transponders.end(), [&](const auto& t) { return t.id == id; });
}

bool RingTopology::has_compute(const NodeId& id) const {
  return std::any_of(computes.begin(), computes.end(), [&](const auto& c) { return c.id == id; });
}

RingTopology build_ring(const TopologySpec& spec) {
  if (spec.roadms.size() < 3) invalid("ring needs at least 3 ROADMs, got " + std::to_string(spec.roadms.size()));
  if (spec.transponders.size() < 2) invalid("at least 2 transponders required");
  if (spec.grid_size <= 0) invalid("grid_size must be positive");

  std::set<std::string> names;
  auto claim = [&](const std::string& name) {
    if (name.empty()) invalid("empty node name");
    if (!names.insert(name).second) invalid("duplicate node name " + name);
  };
  std::set<std::string> roadm_names(spec.roadms.begin(), spec.roadms.end());
  std::set<std::string> switch_names;
  std::set<std::string> compute_names;
  for (const auto& r : spec.roadms) claim(r);
  for (const auto& s : spec.switches) {
    claim(s.id);
    switch_names.insert(s.id);
    if (s.per_pass_latency_ns < 0) invalid("switch " + s.id + " has negative latency");
  }
  for (const auto& c : spec.compute) {
    claim(c.id);
    compute_names.insert(c.id);
    if (c.vcpu <= 0 || c.mem_mb <= 0) invalid("compute " + c.id + " needs positive capacities");
    if (!switch_names.contains(c.attached_switch))
      invalid("compute " + c.id + " attaches to unknown switch " + c.attached_switch);
  }
  for (const auto& t : spec.transponders) {
    claim(t.id);
    if (!roadm_names.contains(t.roadm)) invalid("transponder " + t.id + " attaches to unknown ROADM " + t.roadm);
    if (!switch_names.contains(t.attached_switch))
      invalid("transponder " + t.id + " attaches to unknown switch " + t.attached_switch);
    if (!compute_names.contains(t.compute))
      invalid("transponder " + t.id + " attaches to unknown compute node " + t.compute);
    auto c = std::find_if(spec.compute.begin(), spec.compute.end(), [&](const auto& x) { return x.id == t.compute; });
    if (c->attached_switch != t.attached_switch)
      invalid("compute " + t.compute + " is not behind switch " + t.attached_switch);
    if (t.config_s < 0 || t.warmup_s < 0) invalid("transponder " + t.id + " has negative durations");
  }

  std::set<std::string> link_ids;
  std::map<std::string, std::vector<std::size_t>> incident;
  for (std::size_t i = 0; i < spec.links.size(); ++i) {
    const auto& l = spec.links[i];
    if (l.id.empty() || !link_ids.insert(l.id).second) invalid("missing or duplicate link id '" + l.id + "'");
    if (!roadm_names.contains(l.a) || !roadm_names.contains(l.b))
      invalid("link " + l.id + " must join two declared ROADMs");
    if (l.a == l.b) invalid("link " + l.id + " is a self-loop");
    if (l.length_m < 0) invalid("link " + l.id + " has negative length");
    if (l.group_index < 1.0 || l.group_index > 2.0) invalid("link " + l.id + " group index outside [1, 2]");
    if (l.base_attenuation_db < 0) invalid("link " + l.id + " has negative attenuation");
    if (l.legacy_residual_delay_ns < 0) invalid("link " + l.id + " has negative residual delay");
    incident[l.a].push_back(i);
    incident[l.b].push_back(i);
  }
  if (spec.links.size() != spec.roadms.size()) invalid("ROADM links do not form a single cycle");
  for (const auto& r : spec.roadms)
    if (incident[r].size() != 2) invalid("ROADM " + r + " must have exactly 2 ring links");

  // Walk the cycle from the first declared ROADM along its lowest-index link.
  RingTopology topo;
  topo.grid_size = spec.grid_size;
  std::string at = spec.roadms.front();
  std::size_t via = std::min(incident[at][0], incident[at][1]);
  std::set<std::string> visited;
  while (visited.insert(at).second) {
    RoadmNode node;
    node.id = NodeId{at};
    topo.roadms.push_back(std::move(node));
    const auto& l = spec.links[via];
    topo.links.push_back(FiberLink{l.id, NodeId{l.a}, NodeId{l.b}, l.length_m, l.group_index,
                                   l.base_attenuation_db, 0.0, l.legacy_residual_delay_ns});
    at = l.a == at ? l.b : l.a;
    via = incident[at][0] == via ? incident[at][1] : incident[at][0];
  }
  if (topo.roadms.size() != spec.roadms.size() || at != spec.roadms.front())
    invalid("ROADM links do not form a single cycle");

  for (const auto& s : spec.switches) topo.switches.push_back({NodeId{s.id}, s.per_pass_latency_ns});
  for (const auto& c : spec.compute)
    topo.computes.push_back({NodeId{c.id}, c.vcpu, c.mem_mb, NodeId{c.attached_switch}});
  for (const auto& t : spec.transponders) {
    TransponderNode tp;
    tp.id = NodeId{t.id};
    tp.attached_roadm = NodeId{t.roadm};
    tp.attached_switch = NodeId{t.attached_switch};
    tp.attached_compute = NodeId{t.compute};
    tp.config_duration = from_seconds(t.config_s);
    tp.warmup_duration = from_seconds(t.warmup_s);
    topo.roadms[topo.roadm_position(tp.attached_roadm)].drop_ports.push_back(tp.id);
    topo.transponders.push_back(std::move(tp));
  }
  return topo;
}

std::vector<OpticalPath> find_ring_paths(const NodeId& a, const NodeId& b, const RingTopology& topo) {
  const auto& ta = topo.transponder(a);
  const auto& tb = topo.transponder(b);
  const std::size_t from = topo.roadm_position(ta.attached_roadm);
  const std::size_t to = topo.roadm_position(tb.attached_roadm);
  if (from == to) {
    throw Error(ErrorCode::NoPath, a.name + " and " + b.name + " share ROADM " + ta.attached_roadm.name);
  }
  std::vector<OpticalPath> paths{make_arc(a, b, from, to, Direction::Clockwise, topo),
                                 make_arc(a, b, from, to, Direction::CounterClockwise, topo)};
  std::stable_sort(paths.begin(), paths.end(), [&](const auto& x, const auto& y) {
    return path_metrics(x, topo).total_length_m < path_metrics(y, topo).total_length_m;
  });
  return paths;
}

OpticalPath alternate_arc(const OpticalPath& path, const RingTopology& topo) {
  const Direction dir = reverse(path.direction);
  return make_arc(path.source, path.destination, path.roadms.front(), path.roadms.back(), dir, topo);
}

PathMetrics path_metrics(const OpticalPath& path, const RingTopology& topo) {
  PathMetrics m;
  for (std::size_t idx : path.links) {
    const auto& l = topo.links.at(idx);
    m.total_length_m += l.length_m;
    m.total_base_attenuation_db += l.base_attenuation_db;
    ++m.hop_count;
  }
  return m;
}

}  // namespace mst
