#include <doctest.h>

#include "fixtures.hpp"
#include "mst/error.hpp"
#include "mst/probe.hpp"

using namespace mst;
using mst::test::no_jitter;
using mst::test::ring_spec;
using mst::test::video_ns;

namespace {

struct Live {
  Kernel kernel;
  RingTopology topo;
  ControlPlane cp;
  ServiceRecord rec;
  explicit Live(TopologySpec spec)
      : topo(build_ring(spec)), cp(topo, kernel, no_jitter(), CounterRng(1)), rec(deploy_service(cp, kernel, video_ns())) {}
};

Attribution lower_triangular() {
  return {{"probe", "aggregation_switches", "optical_devices"}, {{1, 0, 0}, {1, 1, 0}, {1, 1, 1}}};
}

// Plain normal-equation solve for small dense systems, independent of the library path.
std::vector<double> normal_equations(const std::vector<std::vector<double>>& a, const std::vector<double>& b) {
  const std::size_t n = a[0].size();
  std::vector<std::vector<double>> m(n, std::vector<double>(n + 1, 0.0));
  for (std::size_t r = 0; r < a.size(); ++r)
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) m[i][j] += a[r][i] * a[r][j];
      m[i][n] += a[r][i] * b[r];
    }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    std::swap(m[c], m[piv]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = m[r][c] / m[c][c];
      for (std::size_t j = c; j <= n; ++j) m[r][j] -= f * m[c][j];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = m[i][n] / m[i][i];
  return x;
}

}  // namespace

TEST_SUITE("probe") {
  TEST_CASE("short calibration fiber") {
    Live live(ring_spec(2.1));
    CounterRng rng(1);
    const auto m = measure_round_trip(*live.rec.path, live.topo, ProbeConfig{}, rng);
    CHECK(m.estimated_rt_prop_ns == 21);
    CHECK(m.measured_rt_ns == 15251);
    CHECK(m.delta_ns == 15230);
    CHECK(compute_delta(m) == m.measured_rt_ns - m.estimated_rt_prop_ns);
  }

  TEST_CASE("long link and field residual") {
    CounterRng rng(1);
    Live lab(ring_spec(79969.5));
    const auto m80 = measure_round_trip(*lab.rec.path, lab.topo, ProbeConfig{}, rng);
    CHECK(m80.measured_rt_ns == 783177 + 15230);
    auto spec = ring_spec(6800.0);
    spec.links[0].legacy_residual_delay_ns = 717377;
    Live field(spec);
    const auto m68 = measure_round_trip(*field.rec.path, field.topo, ProbeConfig{}, rng);
    CHECK(m68.measured_rt_ns == 66595 + 15230 + 717377);
  }

  TEST_CASE("delta arithmetic") {
    CHECK(compute_delta({2.1, 15257, 21, 0}) == 15236);
    CHECK(compute_delta({0, 5, 5, 0}) == 0);
    CHECK(compute_delta({6800, 799202, 66595, 0}) == 732607);
  }

  TEST_CASE("estimate is the propagation alias") {
    CHECK(estimate_rt_propagation(0.0).count() == 0);
    CHECK(estimate_rt_propagation(41366.5) == rt_propagation_delay(41366.5));
    CHECK(std::llabs(estimate_rt_propagation(2 * 41366.5).count() - 2 * estimate_rt_propagation(41366.5).count()) <= 1);
  }

  TEST_CASE("switch overhead from topology") {
    Live live(ring_spec());
    CHECK(switch_overhead_from_topology(*live.rec.path, live.topo) == 1290);
  }

  TEST_CASE("zero jitter repeats exactly, jitter varies") {
    Live live(ring_spec());
    CounterRng rng(4);
    const auto a = measure_round_trip(*live.rec.path, live.topo, ProbeConfig{}, rng);
    const auto b = measure_round_trip(*live.rec.path, live.topo, ProbeConfig{}, rng);
    CHECK(a == b);
    ProbeConfig noisy;
    noisy.jitter_sigma_ns = 200;
    const auto c = measure_round_trip(*live.rec.path, live.topo, noisy, rng);
    const auto d = measure_round_trip(*live.rec.path, live.topo, noisy, rng);
    CHECK(c.measured_rt_ns != d.measured_rt_ns);
    CHECK(c.delta_ns == c.measured_rt_ns - c.estimated_rt_prop_ns);
  }

  TEST_CASE("measurement needs an operational path") {
    Kernel k;
    auto topo = build_ring(ring_spec());
    auto p = find_ring_paths(NodeId{"TP1"}, NodeId{"TP2"}, topo).front();
    CounterRng rng(1);
    CHECK_THROWS_AS(measure_round_trip(p, topo, ProbeConfig{}, rng), Error);
  }

  TEST_CASE("fit recovers constructed components") {
    const auto att = lower_triangular();
    const std::vector<double> deltas{840, 840 + 1290, 840 + 1290 + 13100};
    const auto b = fit_budget(deltas, att);
    CHECK(b.fitted_ns[0] == doctest::Approx(840).epsilon(1e-12));
    CHECK(b.fitted_ns[1] == doctest::Approx(1290).epsilon(1e-12));
    CHECK(b.fitted_ns[2] == doctest::Approx(13100).epsilon(1e-12));
    CHECK(b.total_ns() == doctest::Approx(15230));
    CHECK(b.residual_rms_ns == doctest::Approx(0).epsilon(1e-9));
  }

  TEST_CASE("identity attribution") {
    const auto b = fit_budget(std::vector<double>{5, 7}, Attribution{{"a", "b"}, {{1, 0}, {0, 1}}});
    CHECK(b.fitted_ns[0] == doctest::Approx(5));
    CHECK(b.fitted_ns[1] == doctest::Approx(7));
  }

  TEST_CASE("degenerate attributions") {
    try {
      fit_budget(std::vector<double>{1, 2, 3}, Attribution{{"a", "b"}, {{1, 1}, {2, 2}, {3, 3}}});
      FAIL("expected RankDeficient");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::RankDeficient);
    }
    try {
      fit_budget(std::vector<double>{1}, Attribution{{"a", "b"}, {{1, 1}}});
      FAIL("expected Underdetermined");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Underdetermined);
    }
  }

  TEST_CASE("fit round trip on random full-rank systems") {
    CounterRng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t cols = 1 + trial % 5;
      const std::size_t rows = cols + trial % 4;
      Attribution att;
      for (std::size_t c = 0; c < cols; ++c) att.components.push_back("c" + std::to_string(c));
      std::vector<double> x(cols);
      for (auto& v : x) v = rng.uniform() * 20000.0;
      std::vector<double> deltas;
      for (std::size_t r = 0; r < rows; ++r) {
        std::vector<double> row(cols);
        for (std::size_t c = 0; c < cols; ++c) row[c] = (r == c) ? 1.0 + std::floor(rng.uniform() * 3) : std::floor(rng.uniform() * 3);
        double d = 0.0;
        for (std::size_t c = 0; c < cols; ++c) d += row[c] * x[c];
        att.rows.push_back(row);
        deltas.push_back(d);
      }
      BudgetReport b;
      try {
        b = fit_budget(deltas, att);
      } catch (const Error& e) {
        REQUIRE(e.code() == ErrorCode::RankDeficient);
        continue;
      }
      const auto oracle = normal_equations(att.rows, deltas);
      for (std::size_t c = 0; c < cols; ++c) {
        REQUIRE(std::abs(b.fitted_ns[c] - x[c]) <= 1e-9 * std::max(1.0, x[c]));
        REQUIRE(std::abs(oracle[c] - x[c]) <= 1e-6 * std::max(1.0, x[c]));
      }
    }
  }

  TEST_CASE("calibration sweep reproduces the default budget") {
    CounterRng rng(1);
    const auto cal = run_calibration(ProbeConfig{}, 2.1, kDefaultGroupIndex, rng);
    REQUIRE(cal.measurements.size() == 3);
    const auto b = fit_budget(cal.measurements, cal.attribution);
    CHECK(b.fitted_ns[0] == doctest::Approx(840));
    CHECK(b.fitted_ns[1] == doctest::Approx(1290));
    CHECK(b.fitted_ns[2] == doctest::Approx(13100));
  }
}
