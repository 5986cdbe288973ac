// invariants.hpp: quantum invariants of the time-dependent oscillator and the
// ladder operators built from them.
//
// Every operator is assembled from classical coefficients supplied by the
// classical module (a CoefficientSample), so the algebraic identities below
// are exact up to floating-point and truncation error; ODE error only enters
// through the constancy of G, which the classical module measures.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ermakov/classical.hpp"
#include "ermakov/errors.hpp"
#include "ermakov/fockspace.hpp"
#include "ermakov/profile.hpp"

namespace ermakov {

inline const cplx kI{0.0, 1.0};

// One line of a residual report.
struct ResidualReport {
  std::string identity_name;
  double t = 0.0;
  int N = 0;
  int k = 0;
  double max_abs_residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

inline nlohmann::json to_json(const ResidualReport& r) {
  return {{"identity_name", r.identity_name}, {"t", r.t},   {"N", r.N},
          {"k", r.k},                         {"max_abs_residual", r.max_abs_residual},
          {"tolerance", r.tolerance},         {"pass", r.pass}};
}

inline ResidualReport make_residual(std::string name, double t, int N, int k, double residual, double tol) {
  return {std::move(name), t, N, k, residual, tol, residual < tol};
}

// ------------------------------------------------------------- constructions

// G1 = u1 p - u1' q,  G2 = -u2 p + u2' q.
inline std::pair<Operator, Operator> build_linear_invariants(const FockSpace& s, const CoefficientSample& c) {
  Operator g1 = c.u1 * s.p - c.u1dot * s.q;
  Operator g2 = -c.u2 * s.p + c.u2dot * s.q;
  return {std::move(g1), std::move(g2)};
}

// (G q / rho)^2 + (rho p - rho' q)^2 over 2, from exact quadratic forms.
inline Operator ermakov_invariant_via_rho(const FockSpace& s, double rho, double rhodot, double G) {
  if (!(rho > 0)) throw DomainError("rho must be > 0");
  const double cq = (G * G) / (rho * rho) + rhodot * rhodot;
  return 0.5 * (cq * s.q2 + (rho * rho) * s.p2 - (2.0 * rho * rhodot) * s.qp_sym);
}

struct ErmakovInvariantPair {
  Operator via_rho;
  Operator via_G;
};

// via_rho from (rho, rho', G); via_G = (G1^2 + G2^2)/2 as a literal product.
inline ErmakovInvariantPair build_ermakov_invariant(const FockSpace& s, const CoefficientSample& c) {
  const auto [g1, g2] = build_linear_invariants(s, c);
  Operator via_g(0.5 * (g1.matrix() * g1.matrix() + g2.matrix() * g2.matrix()), s.basis_label, true);
  return {ermakov_invariant_via_rho(s, c.rho, c.rhodot, c.G), std::move(via_g)};
}

// I_u = (u p - u' q)^2 / 2.
inline Operator build_orthogonal_sq_invariant(const FockSpace& s, double u, double udot) {
  return 0.5 * ((u * u) * s.p2 + (udot * udot) * s.q2 - (2.0 * u * udot) * s.qp_sym);
}

struct Ladder {
  Operator ann;
  Operator cre;
};

// A = (G1 - i G2)/sqrt2.
inline Ladder build_ladder_invariants(const Operator& g1, const Operator& g2) {
  const double r2 = 1.0 / std::sqrt(2.0);
  Operator A = r2 * (g1 - kI * g2);
  Operator Ad = A.adjoint();
  return {std::move(A), std::move(Ad)};
}

// Non-Hermitian linear invariant I_c = G1 - i G2 = sqrt2 A.
inline Operator build_Ic(const Operator& g1, const Operator& g2) { return g1 - kI * g2; }

// a(t) = (G q / rho + i(rho p - rho' q))/sqrt2, so that I = a^† a + G/2.
inline Ladder build_lewis_ladder(const FockSpace& s, double rho, double rhodot, double G) {
  if (!(rho > 0)) throw DomainError("rho must be > 0");
  const double r2 = 1.0 / std::sqrt(2.0);
  Operator a = r2 * ((G / rho) * s.q + kI * (rho * s.p - rhodot * s.q));
  Operator ad = a.adjoint();
  return {std::move(a), std::move(ad)};
}

// B = (Omega^{1/2} q + i p / Omega^{1/2})/sqrt2.
inline Ladder build_instantaneous_ladder(const FockSpace& s, double Omega) {
  if (!(Omega > 0) || !std::isfinite(Omega)) throw DomainError("Omega must be > 0");
  const double r = std::sqrt(Omega);
  Operator B = (1.0 / std::sqrt(2.0)) * (r * s.q + kI * (s.p / r));
  Operator Bd = B.adjoint();
  return {std::move(B), std::move(Bd)};
}

// H = (p^2 + Omega^2 q^2)/2 from exact quadratic forms.
inline Operator hamiltonian(const FockSpace& s, double Omega_sq) {
  if (!(Omega_sq > 0) || !std::isfinite(Omega_sq)) throw DomainError("Omega^2 must be > 0");
  return 0.5 * (s.p2 + Omega_sq * s.q2);
}

inline Operator hamiltonian_at(const FockSpace& s, const FrequencyProfile& profile, double t) {
  return hamiltonian(s, profile.omega_sq(t));
}

enum class AlphaKind { u, rho };

struct Transformation {
  double t = 0.0;
  Operator T;
  AlphaKind alpha_kind = AlphaKind::rho;
};

// T = exp(i ln(alpha) (qp + pq)/2) exp(-i alpha'/(2 alpha) q^2).
inline Operator build_T_operator(const FockSpace& s, double alpha, double alphadot) {
  if (!(alpha > 0) || !std::isfinite(alpha)) throw DomainError("alpha must be > 0");
  const Operator squeeze = unitary_exp(s.qp_sym, std::log(alpha));
  const Operator chirp = unitary_exp(s.q2, -alphadot / (2.0 * alpha));
  return squeeze * chirp;
}

inline int work_dim_for(const FockSpace& s, int work_dim) { return work_dim > 0 ? work_dim : kWorkFactor * s.dim; }

// T built in a working space of dimension work_dim (default kWorkFactor * N)
// and cropped to N. Accurate on the low interior block, not exactly unitary.
inline Operator build_T_projected(const FockSpace& s, double alpha, double alphadot, int work_dim = 0) {
  const int w = work_dim_for(s, work_dim);
  if (w < s.dim) throw DomainError("work_dim must be >= N");
  return crop(build_T_operator(make_space(w), alpha, alphadot), s.dim);
}

inline Transformation build_T(const FockSpace& s, double alpha, double alphadot, double t = 0.0,
                              AlphaKind kind = AlphaKind::rho, int work_dim = 0) {
  return {t, build_T_projected(s, alpha, alphadot, work_dim), kind};
}

// --------------------------------------------------------------- full set

struct InvariantSet {
  CoefficientSample coeffs;
  Operator G1, G2;
  Operator I_ermakov_viaG, I_ermakov_viaRho;
  Operator I_u;  // built from u2
  Operator I_c;
  Operator A, A_dag;
  Operator a_t, a_t_dag;
  Operator B, B_dag;
  Operator H;
};

inline InvariantSet build_invariant_set(const FockSpace& s, const CoefficientSample& c) {
  InvariantSet set;
  set.coeffs = c;
  std::tie(set.G1, set.G2) = build_linear_invariants(s, c);
  auto erm = build_ermakov_invariant(s, c);
  set.I_ermakov_viaRho = std::move(erm.via_rho);
  set.I_ermakov_viaG = std::move(erm.via_G);
  set.I_u = build_orthogonal_sq_invariant(s, c.u2, c.u2dot);
  set.I_c = build_Ic(set.G1, set.G2);
  auto A = build_ladder_invariants(set.G1, set.G2);
  set.A = std::move(A.ann);
  set.A_dag = std::move(A.cre);
  auto a = build_lewis_ladder(s, c.rho, c.rhodot, c.G);
  set.a_t = std::move(a.ann);
  set.a_t_dag = std::move(a.cre);
  auto B = build_instantaneous_ladder(s, std::sqrt(c.Omega_sq));
  set.B = std::move(B.ann);
  set.B_dag = std::move(B.cre);
  set.H = hamiltonian(s, c.Omega_sq);
  return set;
}

// The six algebraic identities, each on the interior block k (default 2).
inline std::vector<ResidualReport> operator_identity_suite(const FockSpace& s, const InvariantSet& set,
                                                           double tol = 1e-10, int k = 2) {
  const auto& c = set.coeffs;
  const double G = c.G;
  std::vector<ResidualReport> out;
  const auto add = [&](const char* name, const Operator& r) {
    out.push_back(make_residual(name, c.t, s.dim, k, interior_max_abs(r, k), tol));
  };
  add("[G1,G2]+iG", commutator(set.G1, set.G2) + (kI * G) * s.identity);
  add("I_viaG-I_viaRho", set.I_ermakov_viaG - set.I_ermakov_viaRho);
  add("I-(a^dag a+G/2)", set.I_ermakov_viaRho - (set.a_t_dag * set.a_t + s.scalar(0.5 * G)));
  add("I-(A^dag A+G/2)", set.I_ermakov_viaRho - (set.A_dag * set.A + s.scalar(0.5 * G)));
  add("a-A*exp(-is)", set.a_t - set.A * std::polar(1.0, -c.s));
  add("H-Omega(B^dag B+1/2)", set.H - std::sqrt(c.Omega_sq) * (set.B_dag * set.B + s.scalar(0.5)));
  return out;
}

// ------------------------------------------------------- phase-shift relation

struct PhaseShiftResiduals {
  double residual_rotation = 0.0;  // |e^{isI} A e^{-isI} - A e^{-is}|
  double residual_ladder = 0.0;    // |A e^{-is} - a|
  int k = 0;
};

// The rotation uses e^{isI} = T^† e^{isG(n+1/2)} T with T from alpha = rho/sqrt(G),
// in the working space, cropped to N. Diagonalizing a truncated I instead is
// unreliable once rho is small. Strong squeezing still needs a larger work_dim;
// the ladder identity is a c-number relation checked directly in s.
inline PhaseShiftResiduals phase_shift_relation(const FockSpace& s, const InvariantSet& set, int k,
                                                int work_dim = 0) {
  const auto& c = set.coeffs;
  const double sr = c.s;
  const int w = work_dim_for(s, work_dim);
  const FockSpace big = make_space(w);
  const auto [g1, g2] = build_linear_invariants(big, c);
  const Operator A = build_ladder_invariants(g1, g2).ann;
  const double sg = std::sqrt(c.G);
  const Matrix T = build_T_operator(big, c.rho / sg, c.rhodot / sg).matrix();
  Vector phases(w);
  for (int n = 0; n < w; ++n) phases(n) = std::polar(1.0, sr * c.G * (n + 0.5));
  const Operator U(T.adjoint() * phases.asDiagonal() * T);
  const Operator rotated = crop(U * A * U.adjoint(), s.dim);
  const Operator shifted = set.A * std::polar(1.0, -sr);
  PhaseShiftResiduals r;
  r.k = k;
  r.residual_rotation = interior_max_abs(rotated - shifted, k);
  r.residual_ladder = interior_max_abs(shifted - set.a_t, k);
  return r;
}

// ------------------------------------------------------- rates of change

// Total (Heisenberg) rate of an explicitly time-dependent operator family,
// dO/dt = dO/dt|explicit + i[H(t), O(t)], with the explicit part by central
// differences. Compared with i omega [I, O].
struct RateCheckReport {
  double t = 0.0;
  double h = 0.0;
  int k = 0;
  double residual_h = 0.0;           // relative, step h
  double residual_h2 = 0.0;          // relative, step h/2
  double residual_richardson = 0.0;  // relative, extrapolated
  double abs_residual_richardson = 0.0;
  double target_scale = 0.0;
  bool cancellation = false;  // residual grew when h was halved
};

using OperatorFamily = std::function<Operator(double)>;

// Total rate of op at t by central differences with steps h and h/2 plus the
// Richardson combination.
struct TotalRate {
  Operator d_h, d_h2, d_richardson;
};

inline TotalRate total_rate(const OperatorFamily& op, const OperatorFamily& hamiltonian_family, double t, double h) {
  if (!(h > 0)) throw DomainError("step h must be > 0");
  const Operator flow = kI * commutator(hamiltonian_family(t), op(t));
  auto rate = [&](double step) { return (op(t + step) - op(t - step)) / (2.0 * step) + flow; };
  TotalRate r{rate(h), rate(0.5 * h), Operator()};
  r.d_richardson = (4.0 / 3.0) * r.d_h2 - (1.0 / 3.0) * r.d_h;
  return r;
}

inline RateCheckReport compare_rate(const TotalRate& rate, const Operator& target, double t, double h, int k) {
  RateCheckReport r;
  r.t = t;
  r.h = h;
  r.k = k;
  r.target_scale = interior_max_abs(target, k);
  const double scale = r.target_scale > 0 ? r.target_scale : 1.0;
  r.residual_h = interior_max_abs(rate.d_h - target, k) / scale;
  r.residual_h2 = interior_max_abs(rate.d_h2 - target, k) / scale;
  r.abs_residual_richardson = interior_max_abs(rate.d_richardson - target, k);
  r.residual_richardson = r.abs_residual_richardson / scale;
  // Below ~1e-11 both residuals sit at the roundoff floor and their order carries no information.
  r.cancellation = r.residual_h2 > r.residual_h && r.residual_h2 > 1e-11;
  return r;
}

inline RateCheckReport heisenberg_rate_check(const OperatorFamily& op, const OperatorFamily& hamiltonian_family,
                                             const Operator& I, double omega, double t, double h, int k) {
  const Operator target = (kI * omega) * commutator(I, op(t));
  return compare_rate(total_rate(op, hamiltonian_family, t, h), target, t, h, k);
}

// omega I = H - i (dT^†/dt) T with T built from alpha = rho. The residual is
// max|omega I - H + i (dT^†/dt) T| relative to max|H| on the interior block.
struct HamiltonianRelationReport {
  double t = 0.0;
  double h = 0.0;
  int k = 0;
  double residual_h = 0.0;
  double residual_h2 = 0.0;
  double residual_richardson = 0.0;
  bool cancellation = false;
};

// coeffs(t') must return classical coefficients at t' for t' in {t, t±h, t±h/2}.
// T and its derivative live in the working space; the residual is cropped to N.
inline HamiltonianRelationReport invariant_hamiltonian_relation(
    const FockSpace& s, const std::function<CoefficientSample(double)>& coeffs, double t, double h, int k,
    int work_dim = 0) {
  if (!(h > 0)) throw DomainError("step h must be > 0");
  const FockSpace big = make_space(work_dim_for(s, work_dim));
  const CoefficientSample c = coeffs(t);
  const Operator I = ermakov_invariant_via_rho(s, c.rho, c.rhodot, c.G);
  const Operator H = hamiltonian(s, c.Omega_sq);
  const Operator T = build_T_operator(big, c.rho, c.rhodot);
  auto T_at = [&](double tt) {
    const auto cc = coeffs(tt);
    return build_T_operator(big, cc.rho, cc.rhodot);
  };
  auto residual_for = [&](const Operator& dTdag) {
    return (c.omega * I - H + kI * crop(dTdag * T, s.dim));
  };
  auto dTdag = [&](double step) { return (T_at(t + step).adjoint() - T_at(t - step).adjoint()) / (2.0 * step); };
  const Operator d1 = dTdag(h);
  const Operator d2 = dTdag(0.5 * h);
  const Operator dr = (4.0 / 3.0) * d2 - (1.0 / 3.0) * d1;
  const double scale = interior_max_abs(H, k);
  HamiltonianRelationReport r;
  r.t = t;
  r.h = h;
  r.k = k;
  r.residual_h = interior_max_abs(residual_for(d1), k) / scale;
  r.residual_h2 = interior_max_abs(residual_for(d2), k) / scale;
  r.residual_richardson = interior_max_abs(residual_for(dr), k) / scale;
  r.cancellation = r.residual_h2 > r.residual_h && r.residual_h2 > 1e-11;
  return r;
}

// Classical coefficients at arbitrary times from one shared integration.
class CoefficientTable {
 public:
  CoefficientTable(const FrequencyProfile& profile, std::vector<double> times, ErmakovInitial init,
                   const IntegratorOptions& opts = {})
      : profile_(profile), init_(init), opts_(opts) {
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    samples_ = sample_coefficients(profile_, times, init_, 0.0, opts_);
  }

  CoefficientSample operator()(double t) const {
    for (const auto& c : samples_) {
      if (c.t == t) return c;
    }
    return sample_coefficients_at(profile_, t, init_, 0.0, opts_);
  }

  // Stencil times t, t±h, t±h/2.
  static std::vector<double> stencil(double t, double h) { return {t - h, t - 0.5 * h, t, t + 0.5 * h, t + h}; }

 private:
  FrequencyProfile profile_;
  ErmakovInitial init_;
  IntegratorOptions opts_;
  std::vector<CoefficientSample> samples_;
};

}  // namespace ermakov
