#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ermakov/invariants.hpp"

using namespace ermakov;

namespace {
CoefficientSample at(const FrequencyProfile& p, double t, ErmakovInitial init = {}) {
  return sample_coefficients_at(p, t, init);
}
}  // namespace

TEST(Invariants, ConstantAtZeroReducesToReferenceOperators) {
  const auto s = make_space(32);
  const auto c = at(FrequencyProfile::constant(1.0), 0.0);
  const auto set = build_invariant_set(s, c);
  EXPECT_LT(max_abs(set.G1.matrix() - s.q.matrix()), 1e-12);
  EXPECT_LT(max_abs(set.G2.matrix() + s.p.matrix()), 1e-12);
  EXPECT_LT(max_abs(set.A.matrix() - s.a.matrix()), 1e-12);
  const auto eig = hermitian_eigen(set.I_ermakov_viaRho);
  for (int n = 0; n < 32; ++n) EXPECT_NEAR(eig.values(n), n + 0.5, 1e-12);
}

TEST(Invariants, IdentitySuiteOnStepAfterTheStep) {
  const auto s = make_space(64);
  const auto c = at(FrequencyProfile::step(1.0, 2.0, 5.0), 10.0);
  for (const auto& r : operator_identity_suite(s, build_invariant_set(s, c))) {
    EXPECT_LT(r.max_abs_residual, 1e-10) << r.identity_name;
    EXPECT_TRUE(r.pass);
  }
}

// Property: the identities hold at random times on random profiles.
TEST(Invariants, IdentitySuiteRandomTimes) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> t(0.0, 12.0), w(0.6, 2.0);
  const auto s = make_space(48);
  for (int i = 0; i < 8; ++i) {
    const auto p = FrequencyProfile::tanh_sweep(w(rng), w(rng), 6.0, 0.8);
    const auto c = at(p, t(rng), equilibrium_initial(p));
    for (const auto& r : operator_identity_suite(s, build_invariant_set(s, c))) EXPECT_TRUE(r.pass) << r.identity_name;
  }
}

TEST(Invariants, InstantaneousLadderDiagonalizesHamiltonian) {
  const auto s = make_space(32);
  const auto B = build_instantaneous_ladder(s, 2.0);
  const Operator H = hamiltonian(s, 4.0);
  EXPECT_LT(interior_max_abs(H - 2.0 * (B.cre * B.ann + s.scalar(0.5)), 2), 1e-12);
  EXPECT_THROW(build_instantaneous_ladder(s, 0.0), DomainError);
}

TEST(Invariants, TransformationIdentityAtUnitAlpha) {
  const auto s = make_space(24);
  EXPECT_LT(max_abs(build_T_operator(s, 1.0, 0.0).matrix() - Matrix::Identity(24, 24)), 1e-14);
  EXPECT_THROW(build_T_operator(s, 0.0, 0.0), DomainError);
}

// T q T^† = alpha q on the interior, with T built in 6N and cropped.
TEST(Invariants, TransformationScalesCoordinate) {
  const int N = 64;
  const auto big = make_space(6 * N);
  const auto s = make_space(N);
  const Operator T = build_T_operator(big, 2.0, 0.0);
  const Operator x = crop(T * big.q * T.adjoint(), N);
  EXPECT_LT(interior_max_abs(x - 2.0 * s.q, N / 4), 1e-9);
  // the chirp leaves q alone and shifts p by -alpha'/alpha q
  const Operator C = build_T_operator(big, 1.0, 0.6);
  const Operator y = crop(C * big.p * C.adjoint(), N);
  EXPECT_LT(interior_max_abs(y - (s.p + 0.6 * s.q), N / 4), 1e-9);
}

TEST(Invariants, TransformationIsUnitary) {
  const auto s = make_space(96);
  const Matrix T = build_T_operator(s, 1.5, 0.3).matrix();
  EXPECT_LT(max_abs(T * T.adjoint() - Matrix::Identity(96, 96)), 1e-12);
}

TEST(Invariants, PhaseShiftRelation) {
  const auto s = make_space(64);
  const auto c0 = at(FrequencyProfile::constant(1.0), 0.0);
  const auto r0 = phase_shift_relation(s, build_invariant_set(s, c0), 16);
  EXPECT_LT(r0.residual_rotation, 1e-12);
  const auto c1 = at(FrequencyProfile::constant(1.0), 1.0);
  const auto r1 = phase_shift_relation(s, build_invariant_set(s, c1), 16);
  EXPECT_LT(r1.residual_rotation, 1e-10);
  EXPECT_LT(r1.residual_ladder, 1e-12);
  const auto c2 = at(FrequencyProfile::step(1.0, 2.0, 5.0), 10.0);
  const auto r2 = phase_shift_relation(s, build_invariant_set(s, c2), 16);
  EXPECT_LT(r2.residual_rotation, 1e-7);
}

// A(t) is an invariant: its total rate vanishes. a(t) rotates as i omega [I, a].
TEST(Invariants, HeisenbergRates) {
  const auto p = FrequencyProfile::step(1.0, 2.0, 5.0);
  const auto s = make_space(32);
  const double t = 7.3, h = 1e-3;
  const CoefficientTable table(p, CoefficientTable::stencil(t, h), {});
  auto H = [&](double tt) { return hamiltonian(s, table(tt).Omega_sq); };
  auto A = [&](double tt) {
    const auto [g1, g2] = build_linear_invariants(s, table(tt));
    return build_ladder_invariants(g1, g2).ann;
  };
  auto a = [&](double tt) {
    const auto c = table(tt);
    return build_lewis_ladder(s, c.rho, c.rhodot, c.G).ann;
  };
  const auto c = table(t);
  const Operator I = ermakov_invariant_via_rho(s, c.rho, c.rhodot, c.G);
  const auto rA = heisenberg_rate_check(A, H, s.zero(), 0.0, t, h, 2);
  EXPECT_LT(rA.abs_residual_richardson, 1e-6);
  const auto ra = heisenberg_rate_check(a, H, I, c.omega, t, h, 2);
  EXPECT_LT(ra.residual_richardson, 1e-5);
  EXPECT_GT(ra.target_scale, 0.1);
}

TEST(Invariants, HamiltonianRelationConstantEquilibrium) {
  const auto p = FrequencyProfile::constant(2.0);
  const auto s = make_space(32);
  const ErmakovInitial init = equilibrium_initial(p);
  const double t = 1.0, h = 1e-5;
  const CoefficientTable table(p, CoefficientTable::stencil(t, h), init);
  const auto r = invariant_hamiltonian_relation(s, [&](double tt) { return table(tt); }, t, h, 2);
  EXPECT_LT(r.residual_richardson, 1e-6);
}

TEST(Invariants, HamiltonianRelationAfterStep) {
  const auto p = FrequencyProfile::step(1.0, 2.0, 5.0);
  const auto s = make_space(64);
  const double t = 10.0, h = 1e-3;
  const CoefficientTable table(p, CoefficientTable::stencil(t, h), {});
  const auto r = invariant_hamiltonian_relation(s, [&](double tt) { return table(tt); }, t, h, 16);
  EXPECT_LT(r.residual_richardson, 1e-5);
}
