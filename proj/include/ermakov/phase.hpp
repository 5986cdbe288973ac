// phase.hpp: Turski and Susskind-Glogower phase operators in the eigenbasis
// of the Ermakov-Lewis invariant.
//
// The invariant eigenbasis at time t is |n>_t = T^†(t)|n>, with T built from
// alpha = rho/sqrt(G). In that basis a(t) = sqrt(G) a0, so the eigenvector
// phases follow the ladder (<n-1|a(t)|n> real positive) with no extra fixing.
// T is applied in a working space of dimension kWorkFactor*N; operators are
// kept in eigen coordinates (N x N) and mapped back to the reference basis on
// demand.
#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>
#include <nlohmann/json.hpp>

#include "ermakov/classical.hpp"
#include "ermakov/errors.hpp"
#include "ermakov/fockspace.hpp"
#include "ermakov/invariants.hpp"

namespace ermakov {

// ------------------------------------------------------------- quadrature

struct QuadratureScheme {
  int radial_nodes = 200;
  double radial_cutoff = 0.0;  // R; 0 selects sqrt(2N + 6)
  int angular_nodes = 512;

  static QuadratureScheme defaults(int N) { return {200, std::sqrt(2.0 * N + 6.0), 512}; }

  // Radial tail mass beyond R of the highest level the checks use (N/2).
  static double tail_mass(int N, double R) { return boost::math::gamma_q(N / 2.0 + 1.0, R * R); }

  // The defaults, with R^2 widened in steps of 2 until the tail guard holds
  // (only small N need it).
  static QuadratureScheme guarded(int N) {
    QuadratureScheme q = defaults(N);
    while (tail_mass(N, q.radial_cutoff) > 1e-12) q.radial_cutoff = std::sqrt(q.radial_cutoff * q.radial_cutoff + 2.0);
    return q;
  }

  double cutoff_for(int N) const { return radial_cutoff > 0 ? radial_cutoff : std::sqrt(2.0 * N + 6.0); }

  void validate(int N) const {
    const double R = cutoff_for(N);
    if (radial_nodes < 2) throw DomainError("radial_nodes must be >= 2");
    if (angular_nodes < 2 || angular_nodes % 2 != 0) throw DomainError("angular_nodes must be even");
    if (angular_nodes < 2 * N) throw DomainError("angular_nodes must be >= 2N");
    if (R * R < 2.0 * N) throw DomainError("radial cutoff too small: R^2 must be >= 2N");
  }
};

inline nlohmann::json to_json(const QuadratureScheme& q, int N) {
  return {{"radial_nodes", q.radial_nodes}, {"radial_cutoff", q.cutoff_for(N)}, {"angular_nodes", q.angular_nodes}};
}

struct QuadratureRule {
  std::vector<double> x, w;
};

// Gauss-Legendre nodes on [a, b] by Newton iteration on the three-term recurrence.
inline QuadratureRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw DomainError("gauss_legendre needs n >= 1");
  QuadratureRule r;
  r.x.resize(n);
  r.w.resize(n);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    double p0 = 1.0, p1 = 0.0;
    for (int j = 1; j <= n; ++j) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
    }
    dp = n * (z * p0 - p1) / (z * z - 1.0);
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    r.x[i] = mid - half * z;
    r.x[n - 1 - i] = mid + half * z;
    r.w[i] = r.w[n - 1 - i] = half * w;
  }
  return r;
}

// Weights w_j on theta_j = 2 pi j / M such that sum_j w_j f(theta_j) equals
// the integral of theta f(theta) over [0, 2pi) for every trigonometric
// polynomial f of degree < M/2. Plain trapezoid weights would only be O(1/M)
// accurate here because theta itself is not periodic.
inline QuadratureRule theta_moment_rule(int M) {
  if (M < 2 || M % 2 != 0) throw DomainError("angular_nodes must be even");
  constexpr double pi = std::numbers::pi;
  const int K = M / 2 - 1;
  QuadratureRule r;
  r.x.resize(M);
  r.w.resize(M);
  for (int j = 0; j < M; ++j) {
    const double th = 2.0 * pi * j / M;
    double series = 0.0;
    for (int k = K; k >= 1; --k) series += std::sin(k * th) / k;
    r.x[j] = th;
    r.w[j] = (2.0 * pi * pi - 4.0 * pi * series) / M;
  }
  return r;
}

// Turski phase in the number basis of a ladder: (1/pi) sum over the r x theta
// grid of w_r w_theta theta |alpha><alpha| r. The coherent-state amplitudes
// factor into a radial and an angular part, so the double sum is evaluated as
// rad(m+n) * ang(m-n).
inline Matrix turski_number_matrix(int N, const QuadratureScheme& scheme) {
  scheme.validate(N);
  const double R = scheme.cutoff_for(N);
  // Radial tail of the highest diagonal level that the checks rely on.
  const double tail = QuadratureScheme::tail_mass(N, R);
  if (tail > 1e-12) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", tail);
    throw DomainError(std::string("radial cutoff too small: tail mass ") + buf + " > 1e-12");
  }

  const auto radial = gauss_legendre(scheme.radial_nodes, 0.0, R);
  const auto angular = theta_moment_rule(scheme.angular_nodes);
  std::vector<double> lfact(N);
  for (int n = 0; n < N; ++n) lfact[n] = std::lgamma(n + 1.0);

  // rad(m, n) = sum_i w_i r_i e^{-r_i^2} r_i^{m+n} / sqrt(m! n!)
  Eigen::MatrixXd rad = Eigen::MatrixXd::Zero(N, N);
  for (std::size_t i = 0; i < radial.x.size(); ++i) {
    const double r = radial.x[i];
    const double lr = std::log(r);
    for (int m = 0; m < N; ++m) {
      for (int n = m; n < N; ++n) {
        const double e = -r * r + (m + n) * lr - 0.5 * (lfact[m] + lfact[n]);
        rad(m, n) += radial.w[i] * r * std::exp(e);
      }
    }
  }
  // ang(d) = sum_j w_j e^{i d theta_j}
  std::vector<cplx> ang(N);
  for (int d = 0; d < N; ++d) {
    cplx acc = 0.0;
    for (std::size_t j = 0; j < angular.x.size(); ++j) acc += angular.w[j] * std::polar(1.0, d * angular.x[j]);
    ang[d] = acc;
  }
  // c_m conj(c_n) carries e^{i(m-n) theta}, and ang(-d) = conj(ang(d)).
  Matrix phi(N, N);
  for (int m = 0; m < N; ++m) {
    for (int n = m; n < N; ++n) {
      const cplx v = rad(m, n) * std::conj(ang[n - m]) / std::numbers::pi;
      phi(m, n) = v;
      phi(n, m) = std::conj(v);
    }
  }
  return phi;
}

// ---------------------------------------------------------- invariant basis

// Columns of `vectors` are the invariant eigenstates |n>_t, n < N, expressed in
// the reference basis of dimension D = vectors.rows() (D = N for a direct
// diagonalization, D = work dimension for the T-based construction).
struct InvariantBasis {
  double t = 0.0;
  double G = 1.0;
  double s = 0.0;
  double omega = 1.0;
  Matrix vectors;
  Operator I;  // invariant in eigen coordinates

  int dim() const { return static_cast<int>(vectors.cols()); }
  int ref_dim() const { return static_cast<int>(vectors.rows()); }

  Operator to_eigen(const Operator& ref) const {
    if (ref.dim() != ref_dim()) throw DomainError("dim mismatch: operator vs basis reference dimension");
    return Operator(vectors.adjoint() * ref.matrix() * vectors, Basis::InvariantEigenbasis, ref.hermitian_hint());
  }
  // Full reference-space image (D x D).
  Operator to_reference(const Operator& eig) const {
    if (eig.dim() != dim()) throw DomainError("dim mismatch: operator vs basis dimension");
    return Operator(vectors * eig.matrix() * vectors.adjoint(), Basis::ReferenceOscillator, eig.hermitian_hint());
  }
  Vector state_to_reference(const Vector& eig) const { return vectors * eig; }
};

// T-based construction from classical coefficients.
inline InvariantBasis invariant_basis(const FockSpace& s, const CoefficientSample& c, int work_dim = 0) {
  if (!(c.G > 0)) throw DomainError("invariant basis needs G > 0");
  const int w = work_dim_for(s, work_dim);
  const FockSpace big = make_space(w);
  const double sg = std::sqrt(c.G);
  const Operator Tdag = build_T_operator(big, c.rho / sg, c.rhodot / sg).adjoint();
  InvariantBasis b;
  b.t = c.t;
  b.G = c.G;
  b.s = c.s;
  b.omega = c.omega;
  b.vectors = Tdag.matrix().leftCols(s.dim);
  b.I = b.to_eigen(ermakov_invariant_via_rho(big, c.rho, c.rhodot, c.G));
  return b;
}

// Direct diagonalization of a Hermitian invariant. With a ladder, phases are
// fixed so that <n-1|ladder|n> is real positive (vacuum: largest component
// real positive); without one every eigenvector gets the largest-component rule.
inline InvariantBasis eigenbasis_of(const Operator& I, const Operator* ladder = nullptr, double G = 1.0,
                                    double degeneracy_tol = 1e-8) {
  const auto eig = hermitian_eigen(I);
  const auto n = eig.values.size();
  const double scale = std::max(1.0, eig.values.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 1; i < n; ++i) {
    if (eig.values(i) - eig.values(i - 1) < degeneracy_tol * scale) {
      throw DomainError("degenerate invariant spectrum at level " + std::to_string(i));
    }
  }
  Matrix v = eig.vectors;
  auto largest_real = [&v](Eigen::Index j) {
    Eigen::Index arg = 0;
    v.col(j).cwiseAbs().maxCoeff(&arg);
    const cplx z = v(arg, j);
    v.col(j) *= std::conj(z) / std::abs(z);
  };
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!ladder || j == 0) {
      largest_real(j);
      continue;
    }
    const cplx z = v.col(j - 1).dot(ladder->matrix() * v.col(j));  // <j-1|L|j>
    if (std::abs(z) < 1e-8) {
      largest_real(j);
    } else {
      v.col(j) *= std::conj(z) / std::abs(z);
    }
  }
  InvariantBasis b;
  b.G = G;
  b.vectors = std::move(v);
  b.I = b.to_eigen(I);
  return b;
}

// ------------------------------------------------------------- phase set

struct PhaseSet {
  InvariantBasis basis;
  Operator V, V_dag, C, S;  // eigen coordinates
  std::optional<Operator> Phi;
};

inline Matrix shift_matrix(int N) {
  Matrix v = Matrix::Zero(N, N);
  for (int n = 0; n + 1 < N; ++n) v(n, n + 1) = 1.0;
  return v;
}

inline PhaseSet susskind_glogower(InvariantBasis basis) {
  const int N = basis.dim();
  PhaseSet ps;
  ps.V = Operator(shift_matrix(N), Basis::InvariantEigenbasis);
  ps.V_dag = ps.V.adjoint();
  ps.C = Operator(0.5 * (ps.V.matrix() + ps.V_dag.matrix()), Basis::InvariantEigenbasis, true);
  ps.S = Operator(cplx(0.0, -0.5) * (ps.V.matrix() - ps.V_dag.matrix()), Basis::InvariantEigenbasis, true);
  ps.basis = std::move(basis);
  return ps;
}

inline PhaseSet susskind_glogower(const Operator& I, const Operator* ladder = nullptr, double G = 1.0) {
  return susskind_glogower(eigenbasis_of(I, ladder, G));
}

inline Operator turski_phase(const InvariantBasis& basis, const QuadratureScheme& scheme) {
  return Operator(turski_number_matrix(basis.dim(), scheme), Basis::InvariantEigenbasis, true);
}

// Turski phase built with the reference ladder a0.
inline Operator turski_phase(const FockSpace& s, const QuadratureScheme& scheme) {
  return Operator(turski_number_matrix(s.dim, scheme), Basis::ReferenceOscillator, true);
}

inline PhaseSet build_phase_set(InvariantBasis basis, const QuadratureScheme& scheme) {
  PhaseSet ps = susskind_glogower(std::move(basis));
  ps.Phi = turski_phase(ps.basis, scheme);
  return ps;
}

// Coherent amplitudes of the ladder number basis.
inline Vector ladder_coherent(int N, cplx alpha) { return coherent_amplitudes(N, alpha); }

// --------------------------------------------------------------- reports

struct PhaseCheck {
  std::string name;
  double t = 0.0;
  int N = 0;
  nlohmann::json scheme;
  double value = 0.0;
  double target = 0.0;
  double deviation = 0.0;
  bool pass = false;
};

inline nlohmann::json to_json(const PhaseCheck& c) {
  return {{"name", c.name},   {"t", c.t},           {"N", c.N},
          {"scheme", c.scheme}, {"value", c.value}, {"target", c.target},
          {"deviation", c.deviation}, {"pass", c.pass}};
}

// V V^† = 1, V^† V = 1 - |0><0|, shifter V I V^† = I + G and the two
// commutators, all in eigen coordinates on the interior block k.
inline std::vector<ResidualReport> sg_identity_suite(const PhaseSet& ps, double tol = 1e-10, int k = 2) {
  const int N = ps.basis.dim();
  const double G = ps.basis.G;
  const Operator one(Matrix::Identity(N, N), Basis::InvariantEigenbasis, true);
  Matrix p0 = Matrix::Identity(N, N);
  p0(0, 0) = 0.0;
  const Operator one_minus_vac(p0, Basis::InvariantEigenbasis, true);
  const Operator& I = ps.basis.I;
  std::vector<ResidualReport> out;
  const auto add = [&](const char* name, const Operator& r) {
    out.push_back(make_residual(name, ps.basis.t, N, k, interior_max_abs(r, k), tol));
  };
  add("VVdag-1", ps.V * ps.V_dag - one);
  add("VdagV-(1-|0><0|)", ps.V_dag * ps.V - one_minus_vac);
  add("VIVdag-(I+G)", ps.V * I * ps.V_dag - (I + G * one));
  add("[I,C]+iS", commutator(I, ps.C) + kI * ps.S);
  add("[I,S]-iC", commutator(I, ps.S) - kI * ps.C);
  return out;
}

// C^2 + S^2 - (1 - |0><0|/2) on the interior block.
inline double cs_square_residual(const PhaseSet& ps, int k = 2) {
  const int N = ps.basis.dim();
  Matrix target = Matrix::Identity(N, N);
  target(0, 0) = 0.5;
  return interior_max_abs(Matrix(ps.C.matrix() * ps.C.matrix() + ps.S.matrix() * ps.S.matrix() - target), k);
}

struct CommutatorPoint {
  double amplitude = 0.0;
  cplx value;
  double deviation = 0.0;  // |value + i|
};

struct TurskiCommutatorReport {
  double theta0 = std::numbers::pi;
  std::vector<CommutatorPoint> points;
  double max_abs_diagonal = 0.0;  // diagonal of [Phi, I]
  bool monotone = false;
};

// <alpha|[Phi, I]|alpha> for |alpha| in amplitudes, coherent phase theta0
// (default pi, opposite the branch cut of theta at 0). Phi and I share a basis
// in which the coherent amplitudes are the ladder ones.
inline TurskiCommutatorReport turski_commutator_check(const Operator& Phi, const Operator& I,
                                                      const std::vector<double>& amplitudes = {1, 2, 3, 4},
                                                      double theta0 = std::numbers::pi) {
  Operator::check_compatible(Phi, I);
  const Operator comm = commutator(Phi, I);
  TurskiCommutatorReport r;
  r.theta0 = theta0;
  r.max_abs_diagonal = comm.matrix().diagonal().cwiseAbs().maxCoeff();
  for (double a : amplitudes) {
    const QuantumState st = QuantumState::normalized(coherent_amplitudes(static_cast<int>(Phi.dim()), std::polar(a, theta0)));
    const cplx v = expectation(st, comm);
    r.points.push_back({a, v, std::abs(v + kI)});
  }
  r.monotone = true;
  for (std::size_t i = 1; i < r.points.size(); ++i) {
    if (!(r.points[i].deviation < r.points[i - 1].deviation)) r.monotone = false;
  }
  return r;
}

// --------------------------------------------------------- time dependence

using CoefficientFn = std::function<CoefficientSample(double)>;

// Caches invariant bases per time for finite-difference stencils.
class BasisFamily {
 public:
  BasisFamily(const FockSpace& s, CoefficientFn coeffs, int work_dim = 0)
      : s_(s), coeffs_(std::move(coeffs)), work_(work_dim_for(s, work_dim)), big_(make_space(work_)) {}

  const InvariantBasis& at(double t) {
    auto it = cache_.find(t);
    if (it == cache_.end()) it = cache_.emplace(t, invariant_basis(s_, coeffs_(t), work_)).first;
    return it->second;
  }
  CoefficientSample coeffs(double t) const { return coeffs_(t); }
  const FockSpace& work_space() const { return big_; }
  int work_dim() const { return work_; }
  Operator hamiltonian(double t) const { return ermakov::hamiltonian(big_, coeffs_(t).Omega_sq); }

 private:
  const FockSpace& s_;
  CoefficientFn coeffs_;
  int work_;
  FockSpace big_;
  std::map<double, InvariantBasis> cache_;
};

struct CSMotionReport {
  RateCheckReport C;  // dC/dt vs omega S
  RateCheckReport S;  // dS/dt vs -omega C
};

// Heisenberg rates of C(t), S(t) in the reference basis of the working space,
// compared on the first N - k reference rows and columns.
inline CSMotionReport cs_motion_check(const FockSpace& s, const CoefficientFn& coeffs, double t, double h, int k = 2,
                                      int work_dim = 0) {
  BasisFamily fam(s, coeffs, work_dim);
  const PhaseSet proto = susskind_glogower(fam.at(t));
  const int kd = fam.work_dim() - s.dim + k;
  auto C_at = [&](double tt) { return fam.at(tt).to_reference(proto.C); };
  auto S_at = [&](double tt) { return fam.at(tt).to_reference(proto.S); };
  auto H_at = [&](double tt) { return fam.hamiltonian(tt); };
  const double w = fam.at(t).omega;
  CSMotionReport r;
  r.C = compare_rate(total_rate(C_at, H_at, t, h), w * S_at(t), t, h, kd);
  r.S = compare_rate(total_rate(S_at, H_at, t, h), -w * C_at(t), t, h, kd);
  r.C.k = r.S.k = k;
  return r;
}

struct PhiEvolutionReport {
  double t = 0.0;
  double amplitude = 3.0;
  double omega = 0.0;
  double phi_expectation = 0.0;
  double rate_fd = 0.0;           // direct finite-difference route, Richardson
  double rate_fd_h = 0.0;         // step h only
  double rate_identity = 0.0;     // i omega <[I, Phi]>
  double relative_deviation = 0.0;  // |rate_fd + omega| / omega
  bool near_branch_cut = false;
};

// d<alpha|Phi(t)|alpha>/dt for the state that is the coherent state of a(t)
// at time t, by the total derivative (explicit rate + i[H, Phi]).
inline PhiEvolutionReport phi_evolution_check(const FockSpace& s, const CoefficientFn& coeffs,
                                              const QuadratureScheme& scheme, double t, double h,
                                              double amplitude = 3.0, double theta0 = std::numbers::pi,
                                              int work_dim = 0) {
  BasisFamily fam(s, coeffs, work_dim);
  const InvariantBasis& b0 = fam.at(t);
  const Operator phi_eig = turski_phase(b0, scheme);
  auto phi_at = [&](double tt) { return fam.at(tt).to_reference(phi_eig); };
  auto H_at = [&](double tt) { return fam.hamiltonian(tt); };
  const TotalRate rate = total_rate(phi_at, H_at, t, h);
  const Vector c = coherent_amplitudes(s.dim, std::polar(amplitude, theta0));
  const Vector psi = b0.state_to_reference(c);
  auto ev = [&psi](const Operator& o) { return psi.dot(o.matrix() * psi).real(); };

  PhiEvolutionReport r;
  r.t = t;
  r.amplitude = amplitude;
  r.omega = b0.omega;
  r.phi_expectation = c.dot(phi_eig.matrix() * c).real();
  r.rate_fd = ev(rate.d_richardson);
  r.rate_fd_h = ev(rate.d_h);
  r.rate_identity = (kI * b0.omega * c.dot(commutator(b0.I, phi_eig).matrix() * c)).real();
  r.relative_deviation = std::abs(r.rate_fd + r.omega) / r.omega;
  r.near_branch_cut = r.phi_expectation < 0.5 || r.phi_expectation > 2.0 * std::numbers::pi - 0.5;
  return r;
}

// ------------------------------------------------------ amplitude and phase

struct PolarReport {
  double residual_exact = 0.0;
  std::vector<double> residual_dirac;  // index n-1 holds |<n-1|L|n> - <n-1|sqrt(I) V|n>|
  int k = 0;
};

// L = sqrt(I + G/2) V exactly; the Dirac form sqrt(I) V is off by O(1/sqrt n).
// The ladder is given in the reference space of the basis.
inline PolarReport polar_decomposition_check(const Operator& ladder_ref, const PhaseSet& ps, int k = 2) {
  const Operator L = ps.basis.to_eigen(ladder_ref);
  const double G = ps.basis.G;
  const Operator root_shift = hermitian_function(hermitian_eigen(ps.basis.I),
                                                 [G](double x) { return std::sqrt(x + 0.5 * G); },
                                                 Basis::InvariantEigenbasis);
  const Operator root = hermitian_function(hermitian_eigen(ps.basis.I), [](double x) { return std::sqrt(x); },
                                           Basis::InvariantEigenbasis);
  PolarReport r;
  r.k = k;
  r.residual_exact = interior_max_abs(L - root_shift * ps.V, k);
  const Matrix dirac = (root * ps.V).matrix();
  for (int n = 1; n < ps.basis.dim() - k; ++n) {
    r.residual_dirac.push_back(std::abs(L.matrix()(n - 1, n) - dirac(n - 1, n)));
  }
  return r;
}

struct CoordinateReport {
  double residual_qq = 0.0;
  std::vector<double> residual_qqq;  // index n-1: deviation on the (n-1, n) pair
  int k = 0;
};

// q = (a + a^†)/sqrt(2 omega) in the reference space of dimension N, and the
// amplitude-phase form q ~ sqrt(I/2w) V + V^† sqrt(I/2w) in eigen coordinates.
inline CoordinateReport coordinate_amplitude_phase_check(const FockSpace& s, const CoefficientSample& c,
                                                         const PhaseSet& ps, int k = 2) {
  if (!(c.omega > 0)) throw DomainError("omega must be > 0");
  const Ladder a = build_lewis_ladder(s, c.rho, c.rhodot, c.G);
  CoordinateReport r;
  r.k = k;
  r.residual_qq = interior_max_abs(s.q - (a.ann + a.cre) / std::sqrt(2.0 * c.omega), k);

  const FockSpace ref = make_space(ps.basis.ref_dim());
  const Operator q_eig = ps.basis.to_eigen(ref.q);
  const double w2 = 2.0 * c.omega;
  const Operator amp = hermitian_function(hermitian_eigen(ps.basis.I), [w2](double x) { return std::sqrt(x / w2); },
                                          Basis::InvariantEigenbasis);
  const Matrix form = (amp * ps.V + ps.V_dag * amp).matrix();
  const Matrix dev = q_eig.matrix() - form;
  for (int n = 1; n < ps.basis.dim() - k; ++n) {
    r.residual_qqq.push_back(std::max(std::abs(dev(n - 1, n)), std::abs(dev(n, n - 1))));
  }
  return r;
}

struct NumberReport {
  double n_hat_expect = 0.0;     // <a^† a>/omega
  double ladder_number = 0.0;    // <a^† a>
  double invariant_expect = 0.0; // <I>
  double energy = 0.0;           // <n_hat> omega
  double ladder_identity_residual = 0.0;  // |<I> - <a^† a> - G/2|
  std::optional<double> reconstructed_invariant;  // (<a^† a> + 1/2)(-d<Phi>/dt)/omega
};

inline NumberReport number_operator_report(const FockSpace& s, const CoefficientSample& c, const QuantumState& st,
                                           std::optional<double> phi_rate = std::nullopt) {
  if (!(c.omega > 0)) throw DomainError("omega must be > 0");
  const Ladder a = build_lewis_ladder(s, c.rho, c.rhodot, c.G);
  const Operator I = ermakov_invariant_via_rho(s, c.rho, c.rhodot, c.G);
  NumberReport r;
  r.ladder_number = expectation(st, a.cre * a.ann).real();
  r.n_hat_expect = r.ladder_number / c.omega;
  r.invariant_expect = expectation(st, I).real();
  r.energy = r.n_hat_expect * c.omega;
  r.ladder_identity_residual = std::abs(r.invariant_expect - r.ladder_number - 0.5 * c.G);
  if (phi_rate) r.reconstructed_invariant = (r.ladder_number + 0.5 * c.G) * (-*phi_rate) / c.omega;
  return r;
}

// CSV of <Phi>(t) for plotting: "t,phi_expect,near_branch_cut".
inline void write_phi_csv(std::ostream& os, const std::vector<PhiEvolutionReport>& rows) {
  os << "t,phi_expect,near_branch_cut\n";
  for (const auto& r : rows) {
    os << detail::fmt17(r.t) << ',' << detail::fmt17(r.phi_expectation) << ',' << (r.near_branch_cut ? 1 : 0) << '\n';
  }
}

}  // namespace ermakov
