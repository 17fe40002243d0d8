#include <doctest.h>

#include "fixtures.hpp"
#include "mst/controlplane.hpp"
#include "mst/error.hpp"

using namespace mst;
using mst::test::no_jitter;
using mst::test::ring_spec;
using mst::test::video_ns;

namespace {

TopologySpec four_transponders(int grid = kDefaultGridSize) {
  auto spec = ring_spec();
  spec.transponders.push_back({"TP3", "ROADM1", "SW1", "DC1"});
  spec.transponders.push_back({"TP4", "ROADM2", "SW2", "DC2"});
  spec.transponders.push_back({"TP5", "ROADM3", "SW2", "DC2"});
  spec.grid_size = grid;
  return spec;
}

NsDescriptor ns_between(const std::string& a, const std::string& b) {
  auto ns = video_ns();
  ns.endpoints = {a, b};
  for (auto& v : ns.vnfs) v.vcpu = 1;
  return ns;
}

DegradationEvent alert_for(ServiceId id, SimTime t) {
  DegradationEvent ev;
  ev.service_id = id;
  ev.t_detect = t;
  return ev;
}

double secs(const std::optional<SimTime>& t) { return to_seconds(*t); }

}  // namespace

TEST_SUITE("controlplane") {
  TEST_CASE("deterministic workflow timestamps") {
    Kernel k;
    auto topo = build_ring(ring_spec());
    ControlPlane cp(topo, k, no_jitter(), CounterRng(1));
    const auto rec = deploy_service(cp, k, video_ns());
    REQUIRE(rec.status == ServiceStatus::Active);
    const auto& ts = rec.ts;
    CHECK(secs(ts.request) == 0.0);
    CHECK(secs(ts.vnfs_started) == 0.0);
    CHECK(secs(ts.vnfs_ready) == 40.0);
    CHECK(secs(ts.conn_requested) == 40.0);
    CHECK(secs(ts.roadms_configured) == 48.0);
    CHECK(secs(ts.transponders_configured) == 50.0);
    CHECK(secs(ts.path_operational) == 175.0);
    CHECK(secs(ts.probe_verified) == 177.0);
    CHECK(secs(ts.monitoring_active) == 177.0);
    const auto kpi = compute_kpis(rec);
    CHECK(kpi.ns_deploy == from_seconds(40));
    CHECK(kpi.connectivity == from_seconds(135));
    CHECK(kpi.e2e == from_seconds(177));
    CHECK(kpi.e2e_excl_transponder == from_seconds(50));
    CHECK(rec.transponder_phase == from_seconds(127));
    REQUIRE(rec.path);
    CHECK(rec.path->channel == ChannelId{0});
    CHECK(rec.path->links.size() == 1);
  }

  TEST_CASE("jitter off is seed independent") {
    std::optional<KpiReport> first;
    for (std::uint64_t seed : {1ULL, 2ULL, 99ULL, 123456789ULL}) {
      Kernel k;
      auto topo = build_ring(ring_spec());
      ControlPlane cp(topo, k, no_jitter(), CounterRng(seed));
      const auto kpi = compute_kpis(deploy_service(cp, k, video_ns()));
      if (first) CHECK(kpi == *first);
      first = kpi;
    }
  }

  TEST_CASE("timestamps are ordered and kpis consistent under jitter") {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
      Kernel k;
      auto topo = build_ring(ring_spec());
      ControlPlane cp(topo, k, ControlTiming{}, CounterRng(seed));
      const auto rec = deploy_service(cp, k, video_ns());
      REQUIRE(rec.status == ServiceStatus::Active);
      const auto ordered = rec.ts.ordered();
      for (std::size_t i = 1; i < ordered.size(); ++i) REQUIRE(*ordered[i - 1] <= *ordered[i]);
      const auto kpi = compute_kpis(rec);
      CHECK(kpi.e2e >= kpi.connectivity);
      CHECK(kpi.e2e_excl_transponder.count() >= 0);
    }
  }

  TEST_CASE("placement failure touches no optical state") {
    Kernel k;
    auto topo = build_ring(ring_spec());
    ControlPlane cp(topo, k, no_jitter(), CounterRng(1));
    auto ns = video_ns();
    ns.vnfs[0].vcpu = 1000;
    const auto rec = deploy_service(cp, k, ns);
    CHECK(rec.status == ServiceStatus::Failed);
    CHECK(rec.failure == ErrorCode::PlacementFailed);
    CHECK(cp.channels().size() == 0);
    for (const auto& r : topo.roadms) {
      CHECK(r.blockers[0].empty());
      CHECK(r.blockers[1].empty());
    }
    for (const auto& c : topo.computes) CHECK(c.vcpu_used == 0);
    CHECK_THROWS_AS(compute_kpis(rec), Error);
  }

  TEST_CASE("vim placement is atomic") {
    auto topo = build_ring(ring_spec());
    Vim vim(topo);
    auto vnfs = video_ns().vnfs;
    vnfs[0].vcpu = 30;
    vim.place(vnfs);
    const int used = topo.compute(NodeId{"DC1"}).vcpu_used;
    CHECK_THROWS_AS(vim.place(vnfs), Error);
    CHECK(topo.compute(NodeId{"DC1"}).vcpu_used == used);
    CHECK(topo.compute(NodeId{"DC2"}).vcpu_used == vnfs[1].vcpu);
  }

  TEST_CASE("vim readiness is the slowest vnf") {
    Kernel k;
    auto topo = build_ring(ring_spec());
    Vim vim(topo);
    auto vnfs = video_ns().vnfs;
    vnfs[1].instantiation_s = 38.0;
    CounterRng rng(1);
    std::optional<SimTime> ready;
    const auto inst = vim.instantiate(vnfs, k, rng, false, [&](SimTime t) { ready = t; });
    CHECK(inst.ready_at == at_seconds(40));
    k.run_to_end();
    CHECK(*ready == at_seconds(40));

    Kernel k2;
    auto topo2 = build_ring(ring_spec());
    Vim vim2(topo2);
    auto one = std::vector<VnfDescriptor>{vnfs[0]};
    one[0].instantiation_s = 0.0;
    CHECK(vim2.instantiate(one, k2, rng, false, {}).ready_at == kSimStart);
  }

  TEST_CASE("blocker configuration") {
    RoadmNode r;
    CHECK(r.blocker(ChannelId{4}, Direction::Clockwise) == BlockerState::Block);
    configure_roadm_channel(r, ChannelId{4}, Direction::Clockwise, RoadmRole::Pass);
    configure_roadm_channel(r, ChannelId{4}, Direction::Clockwise, RoadmRole::Pass);
    CHECK(r.blocker(ChannelId{4}, Direction::Clockwise) == BlockerState::Pass);
    CHECK(r.blockers[0].size() == 1);
    configure_roadm_channel(r, ChannelId{4}, Direction::Clockwise, RoadmRole::Block);
    CHECK(r.blocker(ChannelId{4}, Direction::Clockwise) == BlockerState::Block);
  }

  TEST_CASE("direct path provisioning blocks ring circulation") {
    Kernel k;
    auto topo = build_ring(ring_spec());
    ControlPlane cp(topo, k, no_jitter(), CounterRng(1));
    const auto rec = deploy_service(cp, k, video_ns());
    const ChannelId ch = *rec.path->channel;
    const auto r2 = topo.roadm_position(NodeId{"ROADM2"});
    // ROADM2 stops the clockwise broadcast from ROADM1 before it reaches ROADM3.
    CHECK(topo.roadms[r2].blocker(ch, rec.path->direction) == BlockerState::Block);
    for (const auto& r : topo.roadms) {
      CHECK(r.provisioned(ch, Direction::Clockwise));
      CHECK(r.provisioned(ch, Direction::CounterClockwise));
    }
    CHECK(light_loop_free(topo));
  }

  TEST_CASE("a ring that passes a channel everywhere is a loop") {
    auto topo = build_ring(ring_spec());
    for (auto& r : topo.roadms) configure_roadm_channel(r, ChannelId{3}, Direction::Clockwise, RoadmRole::Pass);
    CHECK_FALSE(light_loop_free(topo));
    auto topo2 = build_ring(ring_spec());
    configure_roadm_channel(topo2.roadms[0], ChannelId{2}, Direction::Clockwise, RoadmRole::Add);
    configure_roadm_channel(topo2.roadms[1], ChannelId{2}, Direction::Clockwise, RoadmRole::Pass);
    configure_roadm_channel(topo2.roadms[2], ChannelId{2}, Direction::Clockwise, RoadmRole::Pass);
    configure_roadm_channel(topo2.roadms[0], ChannelId{2}, Direction::CounterClockwise, RoadmRole::Drop);
    CHECK_FALSE(light_loop_free(topo2));
  }

  TEST_CASE("lowest free channel and exhaustion") {
    Kernel k;
    auto topo = build_ring(four_transponders(2));
    ControlPlane cp(topo, k, no_jitter(), CounterRng(1));
    const auto a = deploy_service(cp, k, ns_between("TP1", "TP2"));
    const auto b = deploy_service(cp, k, ns_between("TP3", "TP4"));
    CHECK(a.path->channel == ChannelId{0});
    CHECK(b.path->channel == ChannelId{1});
    CHECK(channels_exclusive(cp));
    CHECK(light_loop_free(topo));

    auto spec = four_transponders(1);
    Kernel k2;
    auto topo2 = build_ring(spec);
    ControlPlane cp2(topo2, k2, no_jitter(), CounterRng(1));
    deploy_service(cp2, k2, ns_between("TP1", "TP2"));
    const auto c = deploy_service(cp2, k2, ns_between("TP3", "TP4"));
    CHECK(c.status == ServiceStatus::Failed);
    CHECK(c.failure == ErrorCode::ChannelExhausted);
    CHECK(channels_exclusive(cp2));
  }

  TEST_CASE("busy transponder is unavailable") {
    Kernel k;
    auto topo = build_ring(four_transponders());
    ControlPlane cp(topo, k, no_jitter(), CounterRng(1));
    deploy_service(cp, k, ns_between("TP1", "TP2"));
    const auto again = deploy_service(cp, k, ns_between("TP1", "TP4"));
    CHECK(again.failure == ErrorCode::TransponderUnavailable);
  }

  TEST_CASE("teardown restores capacity exactly") {
    Kernel k;
    auto topo = build_ring(ring_spec());
    ControlPlane cp(topo, k, no_jitter(), CounterRng(1));
    const auto rec = deploy_service(cp, k, video_ns());
    cp.teardown(rec.request_id);
    for (const auto& c : topo.computes) {
      CHECK(c.vcpu_used == 0);
      CHECK(c.mem_used_mb == 0);
    }
    CHECK(cp.channels().size() == 0);
    for (const auto& t : topo.transponders) CHECK(t.state == TransponderState::Off);
    CHECK(cp.record(rec.request_id).status == ServiceStatus::TornDown);
    const auto again = deploy_service(cp, k, video_ns());
    CHECK(again.status == ServiceStatus::Active);
    CHECK(light_loop_free(topo));
  }

  TEST_CASE("restoration onto the alternate arc") {
    Kernel k;
    auto topo = build_ring(ring_spec());
    ControlPlane cp(topo, k, no_jitter(), CounterRng(1));
    const auto rec = deploy_service(cp, k, video_ns());
    const auto t0 = k.now();
    std::optional<RestorationOutcome> out;
    cp.handle_degradation_alert(alert_for(rec.request_id, t0), t0 + from_seconds(63),
                                [&](const RestorationOutcome& o) { out = o; });
    CHECK(cp.record(rec.request_id).status == ServiceStatus::Degraded);
    k.run_to_end();
    REQUIRE(out);
    CHECK(out->kind == RestorationOutcome::Kind::Restored);
    CHECK(out->at - t0 == from_seconds(10));
    const auto& after = cp.record(rec.request_id);
    CHECK(after.status == ServiceStatus::Restored);
    CHECK(after.path->links.size() == 2);
    CHECK(after.path->channel == rec.path->channel);
    CHECK(light_loop_free(topo));
    CHECK(channels_exclusive(cp));
    for (const auto& t : topo.transponders) CHECK(t.state == TransponderState::Operational);
  }

  TEST_CASE("restoration misses a close deadline") {
    Kernel k;
    auto topo = build_ring(ring_spec());
    ControlPlane cp(topo, k, no_jitter(), CounterRng(1));
    const auto rec = deploy_service(cp, k, video_ns());
    const auto t0 = k.now();
    std::optional<RestorationOutcome> out;
    cp.handle_degradation_alert(alert_for(rec.request_id, t0), t0 + from_seconds(1),
                                [&](const RestorationOutcome& o) { out = o; });
    k.run_to_end();
    REQUIRE(out);
    CHECK(out->kind == RestorationOutcome::Kind::Failed);
    CHECK(out->at == t0 + from_seconds(1));
    CHECK(cp.record(rec.request_id).status == ServiceStatus::Failed);
    CHECK(light_loop_free(topo));
    CHECK(cp.channels().size() == 0);
    for (const auto& c : topo.computes) CHECK(c.vcpu_used == 0);
  }

  TEST_CASE("occupied alternate arc gives NoAlternatePath") {
    Kernel k;
    auto topo = build_ring(four_transponders());
    ControlPlane cp(topo, k, no_jitter(), CounterRng(1));
    const auto a = deploy_service(cp, k, ns_between("TP1", "TP2"));
    const auto b = deploy_service(cp, k, ns_between("TP3", "TP5"));
    REQUIRE(b.status == ServiceStatus::Active);
    REQUIRE(b.path->channel == a.path->channel);  // disjoint links, same slot
    const auto t0 = k.now();
    std::optional<RestorationOutcome> out;
    cp.handle_degradation_alert(alert_for(a.request_id, t0), t0 + from_seconds(100),
                                [&](const RestorationOutcome& o) { out = o; });
    k.run_to_end();
    REQUIRE(out);
    CHECK(out->kind == RestorationOutcome::Kind::Failed);
    CHECK(out->reason == ErrorCode::NoAlternatePath);
    CHECK(channels_exclusive(cp));
    CHECK(cp.record(b.request_id).status == ServiceStatus::Active);
  }

  TEST_CASE("status machine rejects illegal moves") {
    Kernel k;
    auto topo = build_ring(ring_spec());
    ControlPlane cp(topo, k, no_jitter(), CounterRng(1));
    auto ns = video_ns();
    ns.vnfs[0].vcpu = 1000;
    const auto failed = deploy_service(cp, k, ns);
    CHECK_THROWS_AS(cp.handle_degradation_alert(alert_for(failed.request_id, k.now()), k.now() + from_seconds(5)),
                    Error);
  }
}
