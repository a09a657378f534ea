#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "seacache/errors.hpp"
#include "seacache/schedule.hpp"

using namespace seacache;

namespace {

const ScheduleKind kAllKinds[] = {ScheduleKind::RectifiedFlow, ScheduleKind::DpmLinear,
                                  ScheduleKind::DpmCosine};

}  // namespace

TEST_CASE("rf endpoints and midpoint") {
  const auto s = make_rf_schedule(50);
  CHECK(s.kind() == ScheduleKind::RectifiedFlow);
  CHECK(s.steps() == 50);
  CHECK(s.a(0) == 1.0);
  CHECK(s.b(0) == 0.0);
  CHECK(s.a(50) == 0.0);
  CHECK(s.b(50) == 1.0);
  CHECK(s.a(25) == 0.5);
  CHECK(s.b(25) == 0.5);
}

TEST_CASE("rf coefficients are 1 - t/T and t/T with exact unit sum") {
  for (int steps : {1, 2, 3, 7, 50, 97, 1000, 4096}) {
    const auto s = make_rf_schedule(steps);
    for (int t = 0; t <= steps; ++t) {
      const double frac = static_cast<double>(t) / steps;
      CHECK(s.b(t) == frac);
      CHECK(s.a(t) == 1.0 - frac);
      CHECK(s.a(t) + s.b(t) == 1.0);
    }
  }
}

TEST_CASE("zero or negative steps are rejected") {
  CHECK_THROWS_AS(make_rf_schedule(0), InvalidArgument);
  CHECK_THROWS_AS(make_rf_schedule(-3), InvalidArgument);
  CHECK_THROWS_AS(make_dpm_schedule(ScheduleKind::DpmCosine, 0), InvalidArgument);
  CHECK_THROWS_AS(make_dpm_schedule(ScheduleKind::DpmLinear, 0), InvalidArgument);
}

TEST_CASE("dpm factory refuses the rf kind") {
  CHECK_THROWS_AS(make_dpm_schedule(ScheduleKind::RectifiedFlow, 10), InvalidArgument);
}

TEST_CASE("dpm linear cannot subsample beyond its base grid") {
  CHECK_NOTHROW(make_dpm_schedule(ScheduleKind::DpmLinear, 1000));
  CHECK_THROWS_AS(make_dpm_schedule(ScheduleKind::DpmLinear, 1001), InvalidArgument);
}

TEST_CASE("dpm clean endpoint is snapped") {
  for (auto kind : {ScheduleKind::DpmLinear, ScheduleKind::DpmCosine}) {
    for (int steps : {1, 10, 50, 1000}) {
      const auto s = make_dpm_schedule(kind, steps);
      CHECK(s.a(0) == 1.0);
      CHECK(s.b(0) == 0.0);
    }
  }
}

TEST_CASE("dpm linear at T=1000 ends near zero signal") {
  const auto s = make_dpm_schedule(ScheduleKind::DpmLinear, 1000);
  CHECK(std::abs(s.a(1000)) < 1e-2);
  CHECK(s.a(1000) >= kMinSignalCoeff);
}

TEST_CASE("dpm cosine ends at the signal floor") {
  for (int steps : {1, 10, 50, 1000}) {
    const auto s = make_dpm_schedule(ScheduleKind::DpmCosine, steps);
    CHECK(s.a(steps) < 1e-3);
    CHECK(s.a(steps) >= kMinSignalCoeff * (1 - 1e-12));
  }
}

TEST_CASE("dpm coefficients follow the presets") {
  for (int steps : {1, 4, 10, 50, 250, 1000}) {
    const auto lin = make_dpm_schedule(ScheduleKind::DpmLinear, steps);
    const auto cos = make_dpm_schedule(ScheduleKind::DpmCosine, steps);
    for (int t = 1; t < steps; ++t) {
      const int base = static_cast<int>(std::lround(static_cast<double>(t) * 1000.0 / steps));
      CHECK(lin.a(t) == doctest::Approx(std::sqrt(oracle::linear_alpha_bar(base))).epsilon(1e-12));
      CHECK(cos.a(t) ==
            doctest::Approx(std::sqrt(oracle::cosine_alpha_bar(static_cast<double>(t) / steps)))
                .epsilon(1e-12));
    }
  }
}

TEST_CASE("variance preserving identity for dpm kinds") {
  for (auto kind : {ScheduleKind::DpmLinear, ScheduleKind::DpmCosine}) {
    for (int steps : {1, 3, 50, 1000}) {
      const auto s = make_dpm_schedule(kind, steps);
      for (int t = 0; t <= steps; ++t) {
        CHECK(std::abs(s.a(t) * s.a(t) + s.b(t) * s.b(t) - 1.0) <= 1e-9);
      }
    }
  }
}

TEST_CASE("coefficients are strictly monotone and in range") {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> pick(1, 1000);
  for (int trial = 0; trial < 40; ++trial) {
    const int steps = pick(rng);
    for (auto kind : kAllKinds) {
      const auto s = make_schedule(kind, steps);
      for (int t = 0; t <= steps; ++t) {
        CHECK(s.a(t) >= 0.0);
        CHECK(s.a(t) <= 1.0);
        CHECK(s.b(t) >= 0.0);
        CHECK(s.b(t) <= 1.0);
        if (t > 0) {
          CHECK(s.a(t) < s.a(t - 1));
          CHECK(s.b(t) > s.b(t - 1));
        }
      }
    }
  }
}

TEST_CASE("snr examples") {
  const auto s = make_rf_schedule(50);
  REQUIRE(s.snr(25).has_value());
  CHECK(*s.snr(25) == 1.0);
  REQUIRE(s.snr(50).has_value());
  CHECK(*s.snr(50) == 0.0);
  CHECK_FALSE(s.snr(0).has_value());
}

TEST_CASE("snr is strictly decreasing over the whole grid") {
  for (auto kind : kAllKinds) {
    for (int steps : {2, 10, 50, 1000}) {
      const auto s = make_schedule(kind, steps);
      CHECK_FALSE(s.snr(0).has_value());
      double prev = std::numeric_limits<double>::infinity();
      for (int t = 1; t <= steps; ++t) {
        const double v = s.snr(t).value();
        CHECK(v >= 0.0);
        CHECK(v < prev);
        prev = v;
      }
    }
  }
}

TEST_CASE("out of range timesteps raise index errors") {
  const auto s = make_rf_schedule(10);
  CHECK_THROWS_AS(s.a(-1), IndexError);
  CHECK_THROWS_AS(s.b(11), IndexError);
  CHECK_THROWS_AS(s.snr(11), IndexError);
  CHECK_THROWS_AS(s.snr(-1), IndexError);
}

TEST_CASE("construction is deterministic") {
  for (auto kind : kAllKinds) {
    const auto x = make_schedule(kind, 77);
    const auto y = make_schedule(kind, 77);
    CHECK(x.a_values() == y.a_values());
    CHECK(x.b_values() == y.b_values());
  }
}

TEST_CASE("schedule kind names round trip") {
  for (auto kind : kAllKinds) CHECK(parse_schedule_kind(to_string(kind)) == kind);
  CHECK_THROWS_AS(parse_schedule_kind("ddpm"), InvalidArgument);
  CHECK(is_dpm(ScheduleKind::DpmLinear));
  CHECK(is_dpm(ScheduleKind::DpmCosine));
  CHECK_FALSE(is_dpm(ScheduleKind::RectifiedFlow));
}

TEST_CASE("from_coefficients validates external schedules") {
  const auto rf = make_rf_schedule(8);
  const auto copy = NoiseSchedule::from_coefficients(ScheduleKind::RectifiedFlow, rf.a_values(),
                                                     rf.b_values());
  CHECK(copy.a_values() == rf.a_values());
  CHECK(copy.steps() == 8);

  SUBCASE("length mismatch") {
    CHECK_THROWS_AS(NoiseSchedule::from_coefficients(ScheduleKind::RectifiedFlow, {1.0, 0.0},
                                                     {0.0, 0.5, 1.0}),
                    InvalidArgument);
  }
  SUBCASE("too short") {
    CHECK_THROWS_AS(NoiseSchedule::from_coefficients(ScheduleKind::RectifiedFlow, {1.0}, {0.0}),
                    InvalidArgument);
  }
  SUBCASE("not monotone") {
    CHECK_THROWS_AS(NoiseSchedule::from_coefficients(ScheduleKind::RectifiedFlow, {1.0, 1.0, 0.0},
                                                     {0.0, 0.0, 1.0}),
                    InvalidArgument);
  }
  SUBCASE("out of range") {
    CHECK_THROWS_AS(NoiseSchedule::from_coefficients(ScheduleKind::RectifiedFlow, {1.0, -0.5},
                                                     {0.0, 1.5}),
                    InvalidArgument);
  }
  SUBCASE("identity violated") {
    CHECK_THROWS_AS(NoiseSchedule::from_coefficients(ScheduleKind::DpmCosine, {1.0, 0.5, 0.1},
                                                     {0.0, 0.5, 0.9}),
                    InvalidArgument);
  }
}
