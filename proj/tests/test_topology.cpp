#include <doctest.h>

#include <set>

#include "fixtures.hpp"
#include "mst/error.hpp"
#include "mst/topology.hpp"

using namespace mst;
using mst::test::ring_spec;

namespace {
ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::ValidationError;
}
}  // namespace

TEST_SUITE("topology") {
  TEST_CASE("default plant builds") {
    const auto t = build_ring(ring_spec());
    CHECK(t.ring_size() == 3);
    CHECK(t.links.size() == 3);
    CHECK(t.transponders.size() == 2);
    for (const auto& tp : t.transponders) {
      CHECK(tp.state == TransponderState::Off);
      CHECK(tp.line_rate_bps == 100e9);
      CHECK(tp.modulation == "DP-QPSK");
    }
    for (std::size_t i = 0; i < t.links.size(); ++i) {
      CHECK(((t.links[i].a == t.roadms[i].id && t.links[i].b == t.roadms[(i + 1) % 3].id) ||
             (t.links[i].b == t.roadms[i].id && t.links[i].a == t.roadms[(i + 1) % 3].id)));
    }
  }

  TEST_CASE("invalid plants are rejected") {
    auto two = ring_spec();
    two.roadms.pop_back();
    two.links.pop_back();
    two.links.pop_back();
    CHECK(code_of([&] { build_ring(two); }) == ErrorCode::TopologyInvalid);

    auto dup = ring_spec();
    dup.switches.push_back({"ROADM1", 645});
    CHECK(code_of([&] { build_ring(dup); }) == ErrorCode::TopologyInvalid);

    auto dangling = ring_spec();
    dangling.transponders[0].compute = "DC9";
    CHECK(code_of([&] { build_ring(dangling); }) == ErrorCode::TopologyInvalid);

    auto chord = ring_spec();
    chord.links[2].a = "ROADM2";
    chord.links[2].b = "ROADM1";
    CHECK(code_of([&] { build_ring(chord); }) == ErrorCode::TopologyInvalid);

    auto bad_index = ring_spec();
    bad_index.links[0].group_index = 2.5;
    CHECK(code_of([&] { build_ring(bad_index); }) == ErrorCode::TopologyInvalid);
  }

  TEST_CASE("ring paths between ROADM1 and ROADM2") {
    const auto t = build_ring(ring_spec());
    const auto paths = find_ring_paths(NodeId{"TP1"}, NodeId{"TP2"}, t);
    REQUIRE(paths.size() == 2);
    CHECK(paths[0].links.size() == 1);
    CHECK(paths[1].links.size() == 2);
    CHECK_FALSE(paths[0].channel.has_value());
    CHECK(t.links[paths[0].links[0]].id == "L12");
  }

  TEST_CASE("shorter arc first") {
    const auto t = build_ring(ring_spec(80000.0, 41366.5, 6800.0));
    const auto paths = find_ring_paths(NodeId{"TP1"}, NodeId{"TP2"}, t);
    CHECK(paths[0].links.size() == 2);
    CHECK(path_metrics(paths[0], t).total_length_m == doctest::Approx(48166.5));
    CHECK(path_metrics(paths[1], t).total_length_m == doctest::Approx(80000.0));
  }

  TEST_CASE("same ROADM endpoints give NoPath") {
    auto spec = ring_spec();
    spec.transponders[1].roadm = "ROADM1";
    const auto t = build_ring(spec);
    CHECK(code_of([&] { find_ring_paths(NodeId{"TP1"}, NodeId{"TP2"}, t); }) == ErrorCode::NoPath);
  }

  TEST_CASE("path metrics") {
    const auto t = build_ring(ring_spec());
    const auto p = find_ring_paths(NodeId{"TP1"}, NodeId{"TP2"}, t).front();
    const auto m = path_metrics(p, t);
    CHECK(m.total_length_m == 79969.5);
    CHECK(m.hop_count == 1);
    const auto empty = path_metrics(OpticalPath{}, t);
    CHECK(empty.total_length_m == 0.0);
    CHECK(empty.hop_count == 0);
    CHECK(empty.total_base_attenuation_db == 0.0);
  }

  TEST_CASE("the two arcs partition the ring for every ring size") {
    for (int n = 3; n <= 8; ++n) {
      TopologySpec spec;
      for (int i = 0; i < n; ++i) spec.roadms.push_back("R" + std::to_string(i));
      spec.switches = {{"S1", 645}, {"S2", 645}};
      spec.compute = {{"C1", 8, 1024, "S1"}, {"C2", 8, 1024, "S2"}};
      for (int i = 0; i < n; ++i)
        spec.links.push_back({"L" + std::to_string(i), spec.roadms[i], spec.roadms[(i + 1) % n], 1000.0 * (i + 1)});
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
          if (a == b) continue;
          auto s = spec;
          s.transponders = {{"TA", s.roadms[a], "S1", "C1"}, {"TB", s.roadms[b], "S2", "C2"}};
          const auto t = build_ring(s);
          const auto paths = find_ring_paths(NodeId{"TA"}, NodeId{"TB"}, t);
          REQUIRE(paths.size() == 2);
          std::set<std::size_t> seen;
          for (const auto& p : paths)
            for (auto l : p.links) REQUIRE(seen.insert(l).second);
          CHECK(seen.size() == static_cast<std::size_t>(n));
          CHECK(path_metrics(paths[0], t).total_length_m <= path_metrics(paths[1], t).total_length_m);
          CHECK(alternate_arc(paths[0], t).links == paths[1].links);
          // contiguity
          for (const auto& p : paths) {
            std::size_t pos = p.roadms.front();
            for (auto l : p.links) {
              REQUIRE(t.link_from(pos, p.direction) == l);
              pos = t.next_position(pos, p.direction);
            }
            CHECK(pos == p.roadms.back());
          }
        }
      }
    }
  }

  TEST_CASE("transponder state machine") {
    TransponderNode tp;
    CHECK_THROWS_AS(tp.transition(TransponderState::Operational), Error);
    tp.transition(TransponderState::Configuring);
    CHECK_THROWS_AS(tp.transition(TransponderState::Configuring), Error);
    tp.transition(TransponderState::LaserWarmup);
    tp.transition(TransponderState::Operational);
    tp.transition(TransponderState::Off);
    CHECK(tp.state == TransponderState::Off);
  }
}
