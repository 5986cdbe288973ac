#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ermakov/modes.hpp"

using namespace ermakov;

TEST(Modes, LagrangianConversion) {
  EXPECT_DOUBLE_EQ(convert_lagrangian(10.0, 1.0, 2.0), 5.0);
  EXPECT_DOUBLE_EQ(convert_lagrangian(7.0, 3.0, 2.0), 10.5);
  EXPECT_DOUBLE_EQ(convert_lagrangian(7.0, 2.0, 2.0), 7.0);
  EXPECT_THROW(convert_lagrangian(1.0, 0.0, 2.0), DomainError);
}

// Property: n omega is preserved for random inputs.
TEST(Modes, ConversionPreservesEnergy) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const double n = u(rng), a = u(rng), b = u(rng);
    EXPECT_NEAR(convert_lagrangian(n, a, b) * b, n * a, 1e-12 * n * a);
  }
}

namespace {
ModeLedger eulerian(double e1, double w1, double e2, double w2) {
  ModeLedger l;
  l.process = Process::SHG;
  l.frame = Frame::Eulerian;
  l.modes = {{"m1", w1, 0.0, e1}, {"m2", w2, 0.0, e2}};
  return l;
}
}  // namespace

TEST(Modes, EulerianRelation) {
  const auto ok = eulerian_energy_relation(eulerian(2.0, 1.0, 4.0, 2.0));
  EXPECT_TRUE(ok.pass);
  EXPECT_DOUBLE_EQ(ok.ratios[0], 2.0);
  EXPECT_DOUBLE_EQ(*ok.shg_energy_in, *ok.shg_energy_out);
  const auto bad = eulerian_energy_relation(eulerian(2.0, 1.0, 3.0, 2.0));
  EXPECT_FALSE(bad.pass);
  EXPECT_DOUBLE_EQ(bad.deficit, 0.5);
  EXPECT_FALSE(bad.detail.empty());
  auto lag = eulerian(2.0, 1.0, 4.0, 2.0);
  lag.frame = Frame::Lagrangian;
  EXPECT_THROW(eulerian_energy_relation(lag), DomainError);
}

TEST(Modes, ParametricAmplifierAudit) {
  const auto deltas = manley_rowe_deltas(Process::ParametricAmp, -4.0);
  EXPECT_EQ(deltas, (std::vector<double>{-4.0, 4.0, 4.0}));
  const auto r = manley_rowe_audit(Process::ParametricAmp, {3.0, 2.0, 1.0}, {10.0, 0.0, 0.0}, deltas);
  EXPECT_TRUE(r.pass);
  EXPECT_DOUBLE_EQ(r.energy_balance, 0.0);
  EXPECT_TRUE(r.derived_beyond_two_modes);
}

TEST(Modes, ShgAuditReproducesLagrangianConversion) {
  const auto d = manley_rowe_deltas(Process::SHG, -10.0);
  EXPECT_DOUBLE_EQ(d[1], convert_lagrangian(10.0, 1.0, 2.0));
  EXPECT_TRUE(manley_rowe_audit(Process::SHG, {1.0, 2.0}, {10.0, 0.0}, d).pass);
}

TEST(Modes, ViolationsFail) {
  EXPECT_FALSE(manley_rowe_audit(Process::SHG, {1.0, 2.0}, {4.0, 0.0}, {-2.0, 2.0}).pass);
  EXPECT_FALSE(manley_rowe_audit(Process::SFG, {1.0, 1.5, 2.5}, {1, 1, 0}, {-1.0, -1.0, 0.9}).pass);
  EXPECT_THROW(manley_rowe_audit(Process::SFG, {1.0, 1.5, 2.0}, {1, 1, 0}, {-1, -1, 1}), DomainError);
  EXPECT_THROW(check_frequencies(Process::SHG, {1.0, 2.0, 3.0}), DomainError);
}

TEST(Modes, QuantumDemoHalvesNumber) {
  const auto s = make_space(32);
  const auto r = quantum_mode_demo(s, equilibrium_frame(1.0), equilibrium_frame(2.0), coherent_amplitudes(32, 2.0));
  EXPECT_NEAR(r.ladder_number_1, 4.0, 1e-8);
  EXPECT_NEAR(r.ladder_number_2, 4.0, 1e-8);
  EXPECT_NEAR(r.n_hat_1, 4.0, 1e-8);
  EXPECT_NEAR(r.n_hat_2, 2.0, 1e-8);
  EXPECT_LT(r.mismatch, 1e-8);
  EXPECT_LT(r.invariant_drift, 1e-8);
  auto f = equilibrium_frame(2.0);
  f.G = 2.0;
  EXPECT_THROW(quantum_mode_demo(s, equilibrium_frame(1.0), f, coherent_amplitudes(32, 2.0)), DomainError);
}

TEST(Modes, ParseLedger) {
  const auto l = parse_ledger(nlohmann::json::parse(
      R"({"process":"SHG","frame":"Eulerian","modes":[{"omega":1,"energy":2},{"omega":2,"energy":4}]})"));
  EXPECT_EQ(l.modes.size(), 2u);
  EXPECT_TRUE(eulerian_energy_relation(l).pass);
  try {
    parse_ledger(nlohmann::json::parse(R"({"process":"SHG","modes":[{"omega":1,"omegaa":2}]})"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("omegaa"), std::string::npos);
  }
  EXPECT_THROW(parse_ledger(nlohmann::json::parse(R"({"process":"SHG","modes":[{"omega":1},{"omega":3}]})")),
               ConfigError);
}
