#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ermakov/phase.hpp"

using namespace ermakov;

namespace {

// <m|Phi|n> from the integral over the plane with theta in [0, 2pi):
// diagonal pi, off-diagonal -i Gamma((m+n)/2+1) / ((m-n) sqrt(m! n!)).
cplx phi_exact(int m, int n) {
  if (m == n) return std::numbers::pi;
  const double lg = std::lgamma(0.5 * (m + n) + 1.0) - 0.5 * (std::lgamma(m + 1.0) + std::lgamma(n + 1.0));
  return {0.0, -std::exp(lg) / (m - n)};
}

CoefficientSample at(const FrequencyProfile& p, double t, ErmakovInitial init = {}) {
  return sample_coefficients_at(p, t, init);
}

}  // namespace

// Brute-force midpoint rule in r and theta, no factorization.
TEST(Phase, TurskiMatrixMatchesBruteForceQuadrature) {
  const int N = 8;
  const Matrix phi = turski_number_matrix(N, QuadratureScheme::guarded(N));
  const int nr = 1500, nt = 1500;
  const double R = 7.0, hr = R / nr, ht = 2.0 * std::numbers::pi / nt;
  Matrix brute = Matrix::Zero(N, N);
  for (int i = 0; i < nr; ++i) {
    const double r = (i + 0.5) * hr;
    for (int j = 0; j < nt; ++j) {
      const double th = (j + 0.5) * ht;
      Vector c(N);
      for (int n = 0; n < N; ++n) c(n) = std::polar(std::exp(-0.5 * r * r + n * std::log(r) - 0.5 * std::lgamma(n + 1.0)), n * th);
      brute += (th * r * hr * ht / std::numbers::pi) * (c * c.adjoint());
    }
  }
  EXPECT_LT(max_abs(phi - brute), 1e-4);
}

TEST(Phase, TurskiMatrixClosedForm) {
  const int N = 64;
  const Matrix phi = turski_number_matrix(N, QuadratureScheme::guarded(N));
  double worst = 0.0;
  for (int m = 0; m <= N / 2; ++m)
    for (int n = 0; n <= N / 2; ++n) worst = std::max(worst, std::abs(phi(m, n) - phi_exact(m, n)));
  EXPECT_LT(worst, 1e-6);
  EXPECT_LT(max_abs(phi - phi.adjoint()), 1e-8);
}

TEST(Phase, QuadratureGuards) {
  EXPECT_THROW(turski_number_matrix(64, QuadratureScheme{200, 0.0, 100}), DomainError);
  EXPECT_THROW(turski_number_matrix(16, QuadratureScheme::defaults(16)), DomainError);
  const auto q = QuadratureScheme::guarded(16);
  EXPECT_LE(QuadratureScheme::tail_mass(16, q.radial_cutoff), 1e-12);
  EXPECT_EQ(QuadratureScheme::guarded(64).radial_cutoff, QuadratureScheme::defaults(64).radial_cutoff);
}

TEST(Phase, TurskiCommutatorWithNumberOperator) {
  const int N = 128;
  const auto s = make_space(N);
  const Operator Phi = turski_phase(s, QuadratureScheme::guarded(N));
  const Operator I(s.number().matrix() + 0.5 * Matrix::Identity(N, N), Basis::ReferenceOscillator, true);
  const auto r = turski_commutator_check(Phi, I);
  EXPECT_LT(r.max_abs_diagonal, 1e-12);
  EXPECT_TRUE(r.monotone);
  EXPECT_LT(r.points.back().deviation, 0.05);
}

TEST(Phase, SusskindGlogowerElementsAndIdentities) {
  const auto s = make_space(64);
  const auto c = at(FrequencyProfile::step(1.0, 2.0, 5.0), 7.0);
  const auto ps = susskind_glogower(invariant_basis(s, c));
  EXPECT_EQ(ps.V.matrix()(3, 4), cplx(1.0));
  EXPECT_EQ(ps.V.matrix()(4, 3), cplx(0.0));
  EXPECT_NEAR(std::abs(ps.C.matrix()(3, 4) - 0.5), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(ps.S.matrix()(3, 4) - cplx(0, -0.5)), 0.0, 1e-15);
  for (const auto& r : sg_identity_suite(ps)) EXPECT_TRUE(r.pass) << r.identity_name << " " << r.max_abs_residual;
  EXPECT_LT(cs_square_residual(ps), 1e-12);
}

TEST(Phase, InvariantBasisSpectrum) {
  const auto s = make_space(32);
  const auto c = at(FrequencyProfile::tanh_sweep(1.0, 2.0, 5.0, 1.0), 6.0);
  const auto b = invariant_basis(s, c);
  for (int n = 0; n < 24; ++n) EXPECT_NEAR(b.I.matrix()(n, n).real(), c.G * (n + 0.5), 1e-9);
  EXPECT_LT(interior_max_abs(Operator(b.I.matrix() - Matrix(b.I.matrix().diagonal().asDiagonal())), 8), 1e-9);
}

TEST(Phase, EigenbasisPhaseConvention) {
  const auto s = make_space(16);
  const Operator I(s.number().matrix() + 0.5 * Matrix::Identity(16, 16), Basis::ReferenceOscillator, true);
  const auto b = eigenbasis_of(I, &s.a);
  for (int n = 1; n < 16; ++n) {
    const cplx z = b.vectors.col(n - 1).dot(s.a.matrix() * b.vectors.col(n));
    EXPECT_NEAR(z.imag(), 0.0, 1e-12);
    EXPECT_GT(z.real(), 0.0);
  }
  const Operator deg(Matrix::Identity(4, 4), Basis::ReferenceOscillator, true);
  EXPECT_THROW(eigenbasis_of(deg), DomainError);
}

TEST(Phase, PhiRateOnConstantProfiles) {
  const int N = 64;
  const auto s = make_space(N);
  const auto scheme = QuadratureScheme::guarded(N);
  for (double w : {1.0, 2.0}) {
    const auto p = FrequencyProfile::constant(w);
    const ErmakovInitial init = equilibrium_initial(p);
    const double t = 3.0, h = 1e-3;
    const CoefficientTable table(p, CoefficientTable::stencil(t, h), init);
    const auto r = phi_evolution_check(s, [&](double tt) { return table(tt); }, scheme, t, h);
    EXPECT_NEAR(r.omega, w, 1e-9);
    EXPECT_NEAR(r.rate_fd, -w, 0.05 * w);
    EXPECT_NEAR(r.rate_identity, -w, 0.05 * w);
  }
}

TEST(Phase, CSEquationsOfMotionOnStep) {
  const auto p = FrequencyProfile::step(1.0, 2.0, 5.0);
  const auto s = make_space(32);
  const double t = 7.0, h = 1e-3;
  const CoefficientTable table(p, CoefficientTable::stencil(t, h), {});
  const auto r = cs_motion_check(s, [&](double tt) { return table(tt); }, t, h);
  EXPECT_LT(r.C.residual_richardson, 1e-5);
  EXPECT_LT(r.S.residual_richardson, 1e-5);
}

TEST(Phase, PolarDecompositionAndDiracDecay) {
  const int N = 64;
  const auto s = make_space(N);
  const auto c = at(FrequencyProfile::step(1.0, 2.0, 5.0), 8.0);
  const auto ps = susskind_glogower(invariant_basis(s, c));
  const auto big = make_space(ps.basis.ref_dim());
  const auto r = polar_decomposition_check(build_lewis_ladder(big, c.rho, c.rhodot, c.G).ann, ps);
  EXPECT_LT(r.residual_exact, 1e-9);
  // sqrt(G n) - sqrt(G (n - 1/2)) ~ sqrt(G)/(4 sqrt n)
  for (int n = 8; n <= N / 2; ++n) {
    const double oracle = std::sqrt(c.G * n) - std::sqrt(c.G * (n - 0.5));
    EXPECT_NEAR(r.residual_dirac[n - 1], oracle, 1e-8) << n;
  }
}

TEST(Phase, CoordinateForm) {
  const auto s = make_space(64);
  const auto c = at(FrequencyProfile::tanh_sweep(1.0, 2.0, 5.0, 1.0), 5.0);
  const auto ps = susskind_glogower(invariant_basis(s, c));
  const auto r = coordinate_amplitude_phase_check(s, c, ps);
  EXPECT_LT(r.residual_qq, 1e-10);
  for (std::size_t i = 8; i < 32; ++i) EXPECT_LT(r.residual_qqq[i], r.residual_qqq[i - 1]);
}

TEST(Phase, NumberOperatorReport) {
  const auto s = make_space(64);
  const auto st = coherent_state(s, 2.0);
  const auto c1 = at(FrequencyProfile::constant(1.0), 0.0);
  const auto r1 = number_operator_report(s, c1, st, -1.0);
  EXPECT_NEAR(r1.ladder_number, 4.0, 1e-10);
  EXPECT_NEAR(r1.invariant_expect, 4.5, 1e-10);
  EXPECT_LT(r1.ladder_identity_residual, 1e-10);
  EXPECT_NEAR(*r1.reconstructed_invariant, 4.5, 1e-10);
  const auto p2 = FrequencyProfile::constant(2.0);
  const auto c2 = at(p2, 0.0, equilibrium_initial(p2));
  const Vector amps = invariant_basis(s, c2).state_to_reference(coherent_amplitudes(64, 2.0)).head(64);
  const auto r2 = number_operator_report(s, c2, QuantumState::normalized(amps));
  EXPECT_NEAR(r2.ladder_number, 4.0, 1e-8);
  EXPECT_NEAR(r2.n_hat_expect, 2.0, 1e-8);
}
