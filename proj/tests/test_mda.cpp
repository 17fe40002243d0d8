#include <doctest.h>

#include "fixtures.hpp"
#include "mst/error.hpp"
#include "mst/mda.hpp"

using namespace mst;
using mst::test::no_jitter;
using mst::test::ring_spec;
using mst::test::video_ns;

namespace {

const double kSnr0 = 21.84;

TelemetrySample sample(double t_s, double snr) {
  return TelemetrySample{at_seconds(t_s), snr, ber_from_snr(snr, SignalModel{}), false};
}

/// Feeds a baseline then a noise-free ramp; returns the first alert.
std::optional<DegradationEvent> run_ramp(double rate, double kappa, DetectorConfig cfg, double t0 = 60.0,
                                         int after = 2000) {
  DegradationDetector d(cfg, fail_snr_db(SignalModel{}));
  for (int i = 0; i < static_cast<int>(t0); ++i) {
    d.ingest(sample(i, kSnr0));
    if (auto ev = d.detect()) return ev;
  }
  for (int k = 0; k < after; ++k) {
    d.ingest(sample(t0 + k, std::max(kSnr0 - kappa * rate * k, kSnrFloorDb)));
    if (auto ev = d.detect()) return ev;
  }
  return std::nullopt;
}

SoftFailEnvironment environment(std::uint64_t seed = 7) {
  return {ring_spec(), video_ns(), no_jitter(), seed, false};
}

SoftFailSettings settings_for(double noise, int reps) {
  SoftFailSettings s;
  s.repetitions = reps;
  s.noise_sigma_db = noise;
  return s;
}

}  // namespace

TEST_SUITE("mda") {
  TEST_CASE("baseline learning") {
    DegradationDetector d(DetectorConfig{}, 8.78);
    d.ingest(sample(0, 21.0));
    CHECK(d.samples_seen() == 1);
    CHECK_FALSE(d.baseline_ready());
    CHECK_FALSE(d.detect());
    double sum = 21.0;
    for (int i = 1; i < 60; ++i) {
      const double v = 21.0 + 0.01 * (i % 7);
      sum += v;
      d.ingest(sample(i, v));
    }
    CHECK(d.baseline_ready());
    CHECK(d.baseline_db() == doctest::Approx(sum / 60).epsilon(1e-12));
  }

  TEST_CASE("out of order samples") {
    DegradationDetector d(DetectorConfig{}, 8.78);
    d.ingest(sample(5, 21.0));
    try {
      d.ingest(sample(4, 21.0));
      FAIL("expected OutOfOrderSample");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::OutOfOrderSample);
    }
  }

  TEST_CASE("closed-form detection instants") {
    const auto fast = run_ramp(0.25, 1.0, DetectorConfig{});
    REQUIRE(fast);
    CHECK(fast->t_detect == at_seconds(60 + 5));
    const auto slow = run_ramp(0.025, 1.0, DetectorConfig{});
    REQUIRE(slow);
    CHECK(slow->t_detect == at_seconds(60 + 23));
  }

  TEST_CASE("constant stream never fires") {
    DegradationDetector d(DetectorConfig{}, 8.78);
    for (int i = 0; i < 5000; ++i) {
      d.ingest(sample(i, kSnr0));
      REQUIRE_FALSE(d.detect());
    }
  }

  TEST_CASE("slope and prediction on noise-free ramps") {
    for (double rate : {0.01, 0.025, 0.1, 0.25}) {
      for (double kappa : {0.3, 1.0, 1.5}) {
        const auto ev = run_ramp(rate, kappa, DetectorConfig{});
        REQUIRE(ev);
        CHECK(std::abs(ev->fitted_slope_db_per_s + kappa * rate) <= 1e-9 * kappa * rate);
        REQUIRE(ev->predicted_t_fail);
        const double exact = 60.0 + (kSnr0 - fail_snr_db(SignalModel{})) / (kappa * rate);
        CHECK(std::abs(to_seconds(*ev->predicted_t_fail) - exact) < 1e-6);
      }
    }
  }

  TEST_CASE("detection is monotone in rate and threshold") {
    std::optional<SimTime> prev;
    for (double rate = 0.005; rate <= 0.5; rate += 0.005) {
      const auto ev = run_ramp(rate, 1.0, DetectorConfig{}, 60.0, 10000);
      REQUIRE(ev);
      if (prev) REQUIRE(ev->t_detect <= *prev);
      prev = ev->t_detect;
    }
    prev.reset();
    for (double thr = 0.1; thr <= 8.0; thr += 0.1) {
      DetectorConfig cfg;
      cfg.drop_threshold_db = thr;
      const auto ev = run_ramp(0.025, 1.0, cfg, 60.0, 10000);
      REQUIRE(ev);
      if (prev) REQUIRE(ev->t_detect >= *prev);
      prev = ev->t_detect;
    }
  }

  TEST_CASE("one alert per episode") {
    DegradationDetector d(DetectorConfig{}, 8.78);
    int alerts = 0;
    for (int i = 0; i < 60; ++i) d.ingest(sample(i, kSnr0));
    for (int k = 0; k < 40; ++k) {
      d.ingest(sample(60 + k, kSnr0 - 0.25 * k));
      if (d.detect()) ++alerts;
    }
    CHECK(alerts == 1);
    CHECK(d.fired());
    d.reset();
    CHECK_FALSE(d.fired());
    CHECK(d.samples_seen() == 0);
  }

  TEST_CASE("anticipation accounting") {
    DegradationEvent ev;
    ev.t_detect = at_seconds(5);
    const double crossing = (21.84 - 8.79) / 0.25;
    CHECK(to_seconds(anticipation_time(ev, at_seconds(crossing))) == doctest::Approx(47.2).epsilon(1e-9));
    CHECK(anticipation_time(ev, at_seconds(5)).count() == 0);
    try {
      anticipation_time(ev, at_seconds(4));
      FAIL("expected DetectionTooLate");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DetectionTooLate);
    }
  }

  TEST_CASE("soft-failure case composes detection and crossing") {
    const auto r = run_softfail_case({0.25, 1.0, {}}, 0, settings_for(0.0, 1), environment());
    CHECK(r.detection_time == from_seconds(5));
    const double crossing = (kSnr0 - fail_snr_db(SignalModel{})) / 0.25;
    CHECK(to_seconds(r.anticipation) == doctest::Approx(crossing - 5).epsilon(1e-9));
    CHECK(to_seconds(r.anticipation) == doctest::Approx(47.2).epsilon(0.002));
    CHECK(std::abs(to_seconds(r.predicted_anticipation - r.anticipation)) <= 1.0);
    CHECK(r.restored == 1);
    CHECK(r.mean_detection_snr_db == doctest::Approx(kSnr0 - 1.25));
  }

  TEST_CASE("slower ramps detect later and leave more time") {
    for (double thr : {0.5, 1.0, 3.0}) {
      auto s = settings_for(0.0, 1);
      s.detector.drop_threshold_db = thr;
      const auto slow = run_softfail_case({0.025, 1.0, {}}, 0, s, environment());
      const auto fast = run_softfail_case({0.25, 1.0, {}}, 1, s, environment());
      CHECK(fast.detection_time < slow.detection_time);
      CHECK(slow.anticipation > fast.anticipation);
    }
  }

  TEST_CASE("repetitions depend only on seed and index") {
    const auto s = settings_for(0.1, 4);
    const auto a = run_softfail_case({0.25, 0.3, 7.45}, 1, s, environment(), Execution::Serial);
    const auto b = run_softfail_case({0.25, 0.3, 7.45}, 1, s, environment(), Execution::Parallel);
    REQUIRE(a.repetitions.size() == b.repetitions.size());
    for (std::size_t i = 0; i < a.repetitions.size(); ++i) {
      CHECK(a.repetitions[i].detection_time == b.repetitions[i].detection_time);
      CHECK(a.repetitions[i].snr_at_detect_db == b.repetitions[i].snr_at_detect_db);
    }
    const auto one = run_softfail_repetition({0.25, 0.3, 7.45}, 1, s, environment(), 2);
    CHECK(one.snr_at_detect_db == a.repetitions[2].snr_at_detect_db);
    const auto other = run_softfail_case({0.25, 0.3, 7.45}, 1, s, environment(8));
    CHECK(other.mean_detection_snr_db != a.mean_detection_snr_db);
  }

  TEST_CASE("alerts precede failure for rates up to 0.25") {
    for (double rate : {0.01, 0.025, 0.05, 0.1, 0.25}) {
      const auto r = run_softfail_case({rate, 1.0, {}}, 0, settings_for(0.0, 1), environment());
      CHECK(r.anticipation.count() > 0);
    }
  }
}
