// fockspace.hpp: truncated Fock-space operators and states.
//
// The reference basis is the number basis of a unit-mass, unit-frequency
// oscillator (hbar = 1): a|n> = sqrt(n)|n-1>, q = (a + a^†)/sqrt2,
// p = i(a^† - a)/sqrt2. Truncation at dimension N spoils the canonical
// algebra only in the last row/column, so identities are asserted on the
// "interior block" made of the first N - k rows and columns.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "ermakov/errors.hpp"

namespace ermakov {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

enum class Basis { ReferenceOscillator, InvariantEigenbasis };

inline std::string_view to_string(Basis b) {
  return b == Basis::ReferenceOscillator ? "ReferenceOscillator" : "InvariantEigenbasis";
}

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

class Operator {
 public:
  Operator() = default;

  // With hermitian_hint the matrix must satisfy max|M - M^†| <= 1e-12 (relative
  // to max(1, max|M|)); it is then symmetrized exactly.
  explicit Operator(Matrix m, Basis basis = Basis::ReferenceOscillator, bool hermitian_hint = false)
      : m_(std::move(m)), basis_(basis), hermitian_(hermitian_hint) {
    if (m_.rows() != m_.cols()) throw DomainError("operator matrix must be square");
    if (!m_.allFinite()) throw NumericalError("operator has non-finite entries");
    if (hermitian_) {
      const double defect = max_abs(m_ - m_.adjoint());
      if (defect > 1e-12 * std::max(1.0, max_abs(m_))) {
        throw DomainError("hermitian_hint set on a non-Hermitian matrix (defect " + std::to_string(defect) + ")");
      }
      m_ = 0.5 * (m_ + m_.adjoint()).eval();
    }
  }

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  Basis basis() const { return basis_; }
  bool hermitian_hint() const { return hermitian_; }

  Operator adjoint() const { return Operator(m_.adjoint(), basis_, hermitian_); }

  friend Operator operator+(const Operator& a, const Operator& b) {
    check_compatible(a, b);
    return Operator(a.m_ + b.m_, a.basis_, a.hermitian_ && b.hermitian_);
  }
  friend Operator operator-(const Operator& a, const Operator& b) {
    check_compatible(a, b);
    return Operator(a.m_ - b.m_, a.basis_, a.hermitian_ && b.hermitian_);
  }
  friend Operator operator-(const Operator& a) { return Operator(-a.m_, a.basis_, a.hermitian_); }
  friend Operator operator*(const Operator& a, const Operator& b) {
    check_compatible(a, b);
    return Operator(a.m_ * b.m_, a.basis_, false);
  }
  friend Operator operator*(double s, const Operator& a) { return Operator(s * a.m_, a.basis_, a.hermitian_); }
  friend Operator operator*(const Operator& a, double s) { return s * a; }
  friend Operator operator*(cplx s, const Operator& a) {
    return Operator(s * a.m_, a.basis_, a.hermitian_ && s.imag() == 0.0);
  }
  friend Operator operator*(const Operator& a, cplx s) { return s * a; }
  friend Operator operator/(const Operator& a, double s) { return (1.0 / s) * a; }

  static void check_compatible(const Operator& a, const Operator& b) {
    if (a.dim() != b.dim()) throw DomainError("dim mismatch: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
    if (a.basis_ != b.basis_) throw DomainError("basis mismatch between operators");
  }

 private:
  Matrix m_;
  Basis basis_ = Basis::ReferenceOscillator;
  bool hermitian_ = false;
};

inline Operator commutator(const Operator& a, const Operator& b) {
  Operator::check_compatible(a, b);
  return Operator(a.matrix() * b.matrix() - b.matrix() * a.matrix(), a.basis(), false);
}

// Top-left (N-k)x(N-k) block.
inline Matrix interior(const Matrix& m, Eigen::Index k) {
  if (k < 0 || k >= m.rows()) throw DomainError("interior margin k out of range");
  const auto n = m.rows() - k;
  return m.topLeftCorner(n, n);
}

inline double interior_max_abs(const Operator& m, Eigen::Index k) { return max_abs(interior(m.matrix(), k)); }
inline double interior_max_abs(const Matrix& m, Eigen::Index k) { return max_abs(interior(m, k)); }

// Top-left n x n block of an operator built in a larger space.
inline Operator crop(const Operator& m, Eigen::Index n) {
  if (n < 1 || n > m.dim()) throw DomainError("crop size out of range");
  return Operator(m.matrix().topLeftCorner(n, n), m.basis(), m.hermitian_hint());
}

inline Vector embed(const Vector& v, Eigen::Index n) {
  if (n < v.size()) throw DomainError("embed target smaller than vector");
  Vector out = Vector::Zero(n);
  out.head(v.size()) = v;
  return out;
}

// Exponentials of squeezing generators are not the projections of the true
// exponentials; they are built in a space this many times larger and cropped.
inline constexpr int kWorkFactor = 6;

// Quadratic forms q2, p2 and qp_sym = (qp + pq)/2 hold the exact matrix
// elements of the infinite-dimensional operators (computed in dimension N + 2
// and cropped), so they carry no truncation corner defect.
struct FockSpace {
  int dim = 0;
  Basis basis_label = Basis::ReferenceOscillator;
  Operator a, adag, q, p, identity;
  Operator q2, p2, qp_sym;

  Operator number() const { return adag * a; }
  Operator zero() const { return Operator(Matrix::Zero(dim, dim), basis_label, true); }
  Operator scalar(double c) const { return Operator(Matrix::Identity(dim, dim) * c, basis_label, true); }
};

namespace detail {
inline Matrix lowering(int N) {
  Matrix a = Matrix::Zero(N, N);
  for (int n = 1; n < N; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}
}  // namespace detail

inline FockSpace make_space(int N) {
  if (N < 4) throw DomainError("Fock space dimension must be >= 4 (got " + std::to_string(N) + ")");
  const double r2 = 1.0 / std::sqrt(2.0);
  const Matrix a = detail::lowering(N);
  const Matrix adag = a.adjoint();
  FockSpace s;
  s.dim = N;
  s.a = Operator(a);
  s.adag = Operator(adag);
  s.q = Operator(r2 * (a + adag), Basis::ReferenceOscillator, true);
  s.p = Operator(cplx(0.0, r2) * (adag - a), Basis::ReferenceOscillator, true);
  s.identity = Operator(Matrix::Identity(N, N), Basis::ReferenceOscillator, true);

  const Matrix A = detail::lowering(N + 2);
  const Matrix Q = r2 * (A + A.adjoint());
  const Matrix P = cplx(0.0, r2) * (A.adjoint() - A);
  auto crop = [N](const Matrix& m) { return Matrix(m.topLeftCorner(N, N)); };
  s.q2 = Operator(crop(Q * Q), Basis::ReferenceOscillator, true);
  s.p2 = Operator(crop(P * P), Basis::ReferenceOscillator, true);
  s.qp_sym = Operator(crop(0.5 * (Q * P + P * Q)), Basis::ReferenceOscillator, true);
  return s;
}

// ----------------------------------------------------------- spectral calculus

struct HermitianEigen {
  Eigen::VectorXd values;  // ascending
  Matrix vectors;          // columns
};

inline HermitianEigen hermitian_eigen(const Operator& m) {
  if (!m.hermitian_hint()) throw DomainError("eigendecomposition requires a Hermitian operator");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.matrix());
  if (solver.info() != Eigen::Success) throw NumericalError("Hermitian eigendecomposition failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

// U f(Lambda) U^†. A real-valued f yields a Hermitian result; a NaN from f
// (e.g. sqrt of a negative eigenvalue) is reported as undefined.
template <class F>
Operator hermitian_function(const HermitianEigen& eig, F&& f, Basis basis = Basis::ReferenceOscillator) {
  using R = std::invoke_result_t<F&, double>;
  const auto n = eig.values.size();
  Eigen::VectorXcd fv(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const cplx v = static_cast<cplx>(f(eig.values(i)));
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw DomainError("function undefined at eigenvalue " + std::to_string(eig.values(i)));
    }
    fv(i) = v;
  }
  Matrix out = eig.vectors * fv.asDiagonal() * eig.vectors.adjoint();
  constexpr bool real_valued = std::is_floating_point_v<std::decay_t<R>>;
  return Operator(std::move(out), basis, real_valued);
}

namespace detail {

// True when m couples level n only to n and n +- 2, as every quadratic form
// in q and p does.
inline bool parity_tridiagonal(const Matrix& m) {
  const auto n = m.rows();
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto d = r > c ? r - c : c - r;
      if (d != 0 && d != 2 && m(r, c) != cplx(0.0)) return false;
    }
  }
  return true;
}

// f(M) for a Hermitian parity-tridiagonal M. Each parity block is tridiagonal
// Hermitian; the diagonal phase D with D^† M D real symmetric reduces it to a
// real tridiagonal eigenproblem.
template <class F>
Matrix parity_function(const Matrix& m, F& f) {
  const auto n = m.rows();
  Matrix out = Matrix::Zero(n, n);
  for (Eigen::Index parity = 0; parity < 2 && parity < n; ++parity) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = parity; i < n; i += 2) idx.push_back(i);
    const auto k = static_cast<Eigen::Index>(idx.size());
    Eigen::VectorXd diag(k), sub(std::max<Eigen::Index>(k - 1, 1));
    Eigen::VectorXcd phase(k);
    phase(0) = 1.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      diag(j) = m(idx[j], idx[j]).real();
      if (j + 1 < k) {
        const cplx e = m(idx[j], idx[j + 1]);
        sub(j) = std::abs(e);
        phase(j + 1) = sub(j) > 0 ? phase(j) * std::conj(e) / sub(j) : phase(j);
      }
    }
    Eigen::MatrixXd vecs = Eigen::MatrixXd::Ones(1, 1);
    Eigen::VectorXd vals = diag;
    if (k > 1) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
      solver.computeFromTridiagonal(diag, sub.head(k - 1), Eigen::ComputeEigenvectors);
      if (solver.info() != Eigen::Success) throw NumericalError("tridiagonal eigendecomposition failed");
      vecs = solver.eigenvectors();
      vals = solver.eigenvalues();
    }
    Eigen::VectorXcd fv(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      const cplx v = static_cast<cplx>(f(vals(i)));
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
        throw DomainError("function undefined at eigenvalue " + std::to_string(vals(i)));
      }
      fv(i) = v;
    }
    const Matrix w = phase.asDiagonal() * vecs.cast<cplx>();
    const Matrix block = w * fv.asDiagonal() * w.adjoint();
    for (Eigen::Index a = 0; a < k; ++a) {
      for (Eigen::Index b = 0; b < k; ++b) out(idx[a], idx[b]) = block(a, b);
    }
  }
  return out;
}

}  // namespace detail

// Dense eigendecomposition in general; quadratic forms in q, p take the
// parity-tridiagonal route, which is exact and much cheaper in large spaces.
template <class F>
Operator hermitian_function(const Operator& m, F&& f) {
  if (!m.hermitian_hint()) throw DomainError("matrix function requires a Hermitian operator");
  if (detail::parity_tridiagonal(m.matrix())) {
    using R = std::invoke_result_t<F&, double>;
    constexpr bool real_valued = std::is_floating_point_v<std::decay_t<R>>;
    return Operator(detail::parity_function(m.matrix(), f), m.basis(), real_valued);
  }
  return hermitian_function(hermitian_eigen(m), std::forward<F>(f), m.basis());
}

// exp(i c M) for Hermitian M.
inline Operator unitary_exp(const Operator& m, double c) {
  return hermitian_function(m, [c](double x) { return std::polar(1.0, c * x); });
}

// ------------------------------------------------------------------ states

class QuantumState {
 public:
  QuantumState() = default;

  // Validates the norm (within 1e-8 of 1) and records the tail mass.
  explicit QuantumState(Vector amplitudes) : v_(std::move(amplitudes)) {
    if (v_.size() < 1) throw DomainError("empty state");
    if (!v_.allFinite()) throw NumericalError("state has non-finite amplitudes");
    const double nrm = v_.norm();
    if (std::abs(nrm - 1.0) > 1e-8) throw DomainError("state norm " + std::to_string(nrm) + " is not 1");
    tail_ = compute_tail_mass(v_);
  }

  static QuantumState normalized(Vector amplitudes) {
    const double nrm = amplitudes.norm();
    if (!(nrm > 0) || !std::isfinite(nrm)) throw NumericalError("cannot normalize a null state");
    return QuantumState(amplitudes / nrm);
  }

  static QuantumState fock(int dim, int n) {
    if (n < 0 || n >= dim) throw DomainError("Fock level out of range");
    Vector v = Vector::Zero(dim);
    v(n) = 1.0;
    return QuantumState(std::move(v));
  }

  Eigen::Index dim() const { return v_.size(); }
  const Vector& amplitudes() const { return v_; }
  double norm() const { return v_.norm(); }
  double tail_mass() const { return tail_; }

  // Population of the top 10% of levels (at least one level).
  static double compute_tail_mass(const Vector& v) {
    const auto n = v.size();
    const auto top = std::max<Eigen::Index>(1, n / 10);
    return v.tail(top).squaredNorm();
  }

 private:
  Vector v_;
  double tail_ = 0.0;
};

inline cplx expectation(const QuantumState& s, const Operator& m) {
  if (s.dim() != m.dim()) throw DomainError("dim mismatch between state and operator");
  return s.amplitudes().dot(m.matrix() * s.amplitudes());
}

inline double variance(const QuantumState& s, const Operator& m) {
  const cplx mean = expectation(s, m);
  const Vector mv = m.matrix() * s.amplitudes();
  return mv.squaredNorm() - std::norm(mean);
}

inline double fidelity(const QuantumState& a, const QuantumState& b) {
  if (a.dim() != b.dim()) throw DomainError("dim mismatch between states");
  return std::norm(a.amplitudes().dot(b.amplitudes()));
}

// Coherent amplitudes e^{-|alpha|^2/2} alpha^n / sqrt(n!) in the number basis
// of dimension N, renormalized on the truncated basis.
inline Vector coherent_amplitudes(int N, cplx alpha) {
  Vector c = Vector::Zero(N);
  const double r = std::abs(alpha);
  const double theta = std::arg(alpha);
  if (r == 0.0) {
    c(0) = 1.0;
    return c;
  }
  for (int n = 0; n < N; ++n) {
    const double logmag = -0.5 * r * r + n * std::log(r) - 0.5 * std::lgamma(n + 1.0);
    c(n) = std::polar(std::exp(logmag), n * theta);
  }
  return c / c.norm();
}

inline QuantumState coherent_state(const FockSpace& space, cplx alpha) {
  if (std::norm(alpha) > space.dim / 4.0) {
    throw DomainError("coherent amplitude violates truncation guard |alpha|^2 <= N/4");
  }
  return QuantumState(coherent_amplitudes(space.dim, alpha));
}

// ------------------------------------------------------------------ dump

// CSV of (row, col, re, im) for entries with modulus above 1e-14.
inline void write_operator_csv(std::ostream& os, const Operator& m) {
  os << "row,col,re,im\n";
  char buf[128];
  const Matrix& a = m.matrix();
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      if (std::abs(a(r, c)) <= 1e-14) continue;
      std::snprintf(buf, sizeof buf, "%ld,%ld,%.17g,%.17g\n", static_cast<long>(r), static_cast<long>(c),
                    a(r, c).real(), a(r, c).imag());
      os << buf;
    }
  }
}

inline std::string operator_header_json(const Operator& m) {
  return std::string("{\"basis_label\":\"") + std::string(to_string(m.basis())) + "\",\"dim\":" +
         std::to_string(m.dim()) + "}";
}

}  // namespace ermakov
