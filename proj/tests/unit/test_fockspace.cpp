#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ermakov/fockspace.hpp"

using namespace ermakov;

TEST(FockSpace, CoordinateMatrixElement) {
  const auto s = make_space(16);
  EXPECT_NEAR(std::abs(s.q.matrix()(0, 1) - 1.0 / std::sqrt(2.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(s.p.matrix()(0, 1) - cplx(0.0, -1.0 / std::sqrt(2.0))), 0.0, 1e-15);
}

TEST(FockSpace, CanonicalCommutatorAndCornerDefect) {
  const auto s = make_space(16);
  const Matrix qp = commutator(s.q, s.p).matrix();
  for (int n = 0; n < 15; ++n) EXPECT_NEAR(std::abs(qp(n, n) - cplx(0, 1)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(qp(15, 15) - cplx(0, -15)), 0.0, 1e-13);
  const Matrix aa = commutator(s.a, s.adag).matrix();
  EXPECT_NEAR(std::abs(aa(15, 15) + 15.0), 0.0, 1e-13);
  EXPECT_LT(interior_max_abs(Operator(aa - Matrix::Identity(16, 16)), 1), 1e-14);
}

// The quadratic forms are exact: q2 - q*q differs only in the last row/column.
TEST(FockSpace, ExactQuadraticForms) {
  const auto s = make_space(12);
  EXPECT_LT(interior_max_abs(s.q2 - s.q * s.q, 1), 1e-14);
  EXPECT_LT(interior_max_abs(s.qp_sym - 0.5 * (s.q * s.p + s.p * s.q), 1), 1e-14);
  const Operator h = 0.5 * (s.p2 + s.q2);
  for (int n = 0; n < 12; ++n) EXPECT_NEAR(h.matrix()(n, n).real(), n + 0.5, 1e-13);
  EXPECT_LT(max_abs(h.matrix() - Matrix(h.matrix().diagonal().asDiagonal())), 1e-14);
}

TEST(FockSpace, HermitianFunctionIdentityAndSqrtRoundTrip) {
  const auto s = make_space(20);
  const Operator x = s.q2 + 0.3 * s.qp_sym;
  EXPECT_LT(max_abs(hermitian_function(x, [](double v) { return v; }).matrix() - x.matrix()), 1e-12);
  const Operator n = s.number();
  const Operator nh(n.matrix(), Basis::ReferenceOscillator, true);
  const Operator r = hermitian_function(nh, [](double v) { return std::sqrt(std::max(v, 0.0)); });
  EXPECT_LT(max_abs((r * r).matrix() - n.matrix()), 1e-12);
  EXPECT_THROW(hermitian_function(s.q2 - 5.0 * s.identity, [](double v) { return std::sqrt(v); }), DomainError);
  EXPECT_THROW(hermitian_function(s.a, [](double v) { return v; }), DomainError);
}

TEST(FockSpace, ParityRouteMatchesDenseRoute) {
  const auto s = make_space(40);
  const Operator m = 0.7 * s.q2 + 0.2 * s.p2 - 0.4 * s.qp_sym;
  auto f = [](double v) { return std::polar(1.0, 0.37 * v); };
  const Operator fast = hermitian_function(m, f);
  const Operator dense = hermitian_function(hermitian_eigen(m), f);
  EXPECT_LT(max_abs(fast.matrix() - dense.matrix()), 1e-11);
}

TEST(FockSpace, UnitaryExpIsUnitary) {
  const auto s = make_space(48);
  const Operator u = unitary_exp(s.qp_sym, std::log(1.7));
  const Matrix id = Matrix::Identity(48, 48);
  EXPECT_LT(max_abs(u.matrix() * u.matrix().adjoint() - id), 1e-12);
  EXPECT_LT(max_abs(u.matrix().adjoint() * u.matrix() - id), 1e-12);
}

// Poisson statistics of a coherent state, against direct summation of
// e^{-|a|^2} |a|^{2n}/n!.
TEST(FockSpace, CoherentStatistics) {
  const auto s = make_space(64);
  for (double r : {1.0, 2.0}) {
    const auto st = coherent_state(s, cplx(r * std::cos(0.4), r * std::sin(0.4)));
    double mean = 0.0, second = 0.0, p = std::exp(-r * r);
    for (int n = 0; n < 200; ++n) {
      if (n > 0) p *= r * r / n;
      mean += n * p;
      second += double(n) * n * p;
    }
    const Operator num(s.number().matrix(), Basis::ReferenceOscillator, true);
    EXPECT_NEAR(expectation(st, num).real(), mean, 1e-10);
    EXPECT_NEAR(variance(st, num), second - mean * mean, 1e-9);
    EXPECT_NEAR(mean, r * r, 1e-12);
  }
  const auto st = coherent_state(s, 1.5);
  EXPECT_NEAR(expectation(st, s.q).real(), std::sqrt(2.0) * 1.5, 1e-12);
}

TEST(FockSpace, StateValidation) {
  Vector v = Vector::Zero(8);
  v(0) = 2.0;
  EXPECT_THROW(QuantumState{v}, DomainError);
  EXPECT_NO_THROW(QuantumState::normalized(v));
  EXPECT_THROW(QuantumState::fock(8, 8), DomainError);
  EXPECT_THROW(coherent_state(make_space(16), 3.0), DomainError);
  EXPECT_THROW(make_space(2), DomainError);
}

TEST(FockSpace, FidelityProperties) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int i = 0; i < 20; ++i) {
    Vector a(10), b(10);
    for (int k = 0; k < 10; ++k) {
      a(k) = cplx(g(rng), g(rng));
      b(k) = cplx(g(rng), g(rng));
    }
    const auto sa = QuantumState::normalized(a), sb = QuantumState::normalized(b);
    const double f = fidelity(sa, sb);
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0 + 1e-14);
    EXPECT_NEAR(f, fidelity(sb, sa), 1e-14);
    EXPECT_NEAR(fidelity(sa, sa), 1.0, 1e-14);
  }
}

TEST(FockSpace, OperatorGuards) {
  const auto s = make_space(8), t = make_space(10);
  EXPECT_THROW(s.q + t.q, DomainError);
  EXPECT_THROW(Operator(s.a.matrix(), Basis::ReferenceOscillator, true), DomainError);
  EXPECT_THROW(s.q + Operator(s.q.matrix(), Basis::InvariantEigenbasis, true), DomainError);
}
