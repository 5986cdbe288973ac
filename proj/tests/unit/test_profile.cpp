#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ermakov/profile.hpp"

using namespace ermakov;

TEST(Profile, ConstantValue) { EXPECT_DOUBLE_EQ(FrequencyProfile::constant(1.0).omega_sq(7.3), 1.0); }

TEST(Profile, StepIsRightContinuous) {
  const auto p = FrequencyProfile::step(1.0, 2.0, 5.0);
  EXPECT_DOUBLE_EQ(p.omega_sq(5.0), 4.0);
  EXPECT_DOUBLE_EQ(p.omega_sq(std::nextafter(5.0, 0.0)), 1.0);
  ASSERT_EQ(p.breakpoints().size(), 1u);
  EXPECT_DOUBLE_EQ(p.breakpoints()[0], 5.0);
}

TEST(Profile, LinearRamp) { EXPECT_NEAR(FrequencyProfile::linear_ramp(1.0, 0.1).omega_sq(2.0), 1.2, 1e-15); }

TEST(Profile, LinearRampDomainEndsWhereOmegaSqVanishes) {
  const auto p = FrequencyProfile::linear_ramp(1.0, -0.1);
  EXPECT_NO_THROW(p.omega_sq(9.9));
  EXPECT_THROW(p.omega_sq(10.0), DomainError);
}

TEST(Profile, TanhSweepEndpointsAndCenter) {
  const auto p = FrequencyProfile::tanh_sweep(1.0, 2.0, 5.0, 0.5);
  EXPECT_NEAR(p.omega(5.0), 1.5, 1e-15);
  EXPECT_NEAR(p.omega(-50.0), 1.0, 1e-12);
  EXPECT_NEAR(p.omega(60.0), 2.0, 1e-12);
}

TEST(Profile, TabulatedHitsNodesAndRejectsOutside) {
  const auto p = FrequencyProfile::tabulated({0, 1, 2, 3, 4}, {1.0, 1.5, 2.5, 2.6, 4.0});
  EXPECT_NEAR(p.omega_sq(2.0), 2.5, 1e-14);
  EXPECT_THROW(p.omega_sq(4.5), DomainError);
  EXPECT_THROW(FrequencyProfile::tabulated({0, 1, 2}, {1, 1, 1}), ConfigError);
  EXPECT_THROW(FrequencyProfile::tabulated({0, 2, 1, 3}, {1, 1, 1, 1}), ConfigError);
}

// Monotone data stays monotone between nodes (no overshoot).
TEST(Profile, TabulatedIsMonotoneBetweenMonotoneNodes) {
  const auto p = FrequencyProfile::tabulated({0, 1, 2, 3, 4, 5}, {1.0, 1.1, 3.0, 3.05, 3.1, 6.0});
  double prev = p.omega_sq(0.0);
  for (int i = 1; i <= 500; ++i) {
    const double v = p.omega_sq(5.0 * i / 500.0);
    EXPECT_GE(v, prev - 1e-14);
    prev = v;
  }
}

TEST(Profile, ParseRoundTrip) {
  const auto c = parse_profile(std::string_view(R"({"kind":"constant","omega0":1.0})"));
  EXPECT_EQ(c.kind(), ProfileKind::Constant);
  const auto s = parse_profile(std::string_view(R"({"kind":"step","omega0":1.0,"omega1":2.0,"t_step":5.0})"));
  EXPECT_EQ(s.kind(), ProfileKind::Step);
  EXPECT_EQ(parse_profile(to_json(s)).omega_sq(6.0), 4.0);
}

TEST(Profile, ParseErrorsNameTheKey) {
  try {
    parse_profile(std::string_view(R"({"kind":"constant","omega0":-1.0})"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("omega0 must be > 0"), std::string::npos);
  }
  try {
    parse_profile(std::string_view(R"({"kind":"step","omega0":1.0,"omega1":2.0})"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("t_step"), std::string::npos);
  }
  try {
    parse_profile(std::string_view(R"({"kind":"constant","omega0":1.0,"omega9":2})"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("omega9"), std::string::npos);
  }
  EXPECT_THROW(parse_profile(std::string_view(R"({"kind":"wobble"})")), ConfigError);
}

// Property: every parsed profile is finite and positive on its domain.
TEST(Profile, RandomProfilesArePositiveAndFinite) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> w(0.2, 3.0), t(0.0, 20.0);
  for (int i = 0; i < 200; ++i) {
    const auto p = FrequencyProfile::tanh_sweep(w(rng), w(rng), t(rng), 0.1 + w(rng));
    const auto q = FrequencyProfile::step(w(rng), w(rng), t(rng));
    for (int k = 0; k < 20; ++k) {
      const double x = t(rng);
      EXPECT_GT(p.omega_sq(x), 0.0);
      EXPECT_GT(q.omega_sq(x), 0.0);
      EXPECT_TRUE(std::isfinite(p.omega_sq(x)));
    }
  }
}
