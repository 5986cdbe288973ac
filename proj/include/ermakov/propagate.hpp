// propagate.hpp: Schrödinger evolution under H(t) = (p^2 + Omega^2(t) q^2)/2.
//
// direct_propagate steps psi with the midpoint exponential (second-order
// Magnus). H couples n to n and n +- 2 only, so it splits into two real
// tridiagonal parity blocks; each exponential is applied from their
// eigendecompositions. invariant_propagate evaluates the closed form
// psi(t) = T^†(t) exp(-i s(t) I0) T(t0) psi0 in the working space.
#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ermakov/classical.hpp"
#include "ermakov/errors.hpp"
#include "ermakov/fockspace.hpp"
#include "ermakov/invariants.hpp"
#include "ermakov/profile.hpp"

namespace ermakov {

// ------------------------------------------------------------ Magnus stepper

class MagnusStepper {
 public:
  explicit MagnusStepper(const FockSpace& s, std::size_t cache_capacity = 16)
      : N_(s.dim), q2_(s.q2.matrix().real()), p2_(s.p2.matrix().real()), capacity_(cache_capacity) {
    for (int parity = 0; parity < 2; ++parity) {
      auto& idx = index_[parity];
      for (int n = parity; n < N_; n += 2) idx.push_back(n);
    }
  }

  // psi <- exp(-i dt H(Omega_sq)) psi
  void step(Vector& psi, double Omega_sq, double dt) {
    const Entry& e = eigen_for(Omega_sq);
    for (int parity = 0; parity < 2; ++parity) {
      const auto& idx = index_[parity];
      const auto m = static_cast<Eigen::Index>(idx.size());
      Vector part(m);
      for (Eigen::Index i = 0; i < m; ++i) part(i) = psi(idx[i]);
      Vector coeff = e.vectors[parity].adjoint() * part;
      for (Eigen::Index i = 0; i < m; ++i) coeff(i) *= std::polar(1.0, -dt * e.values[parity](i));
      part = e.vectors[parity] * coeff;
      for (Eigen::Index i = 0; i < m; ++i) psi(idx[i]) = part(i);
    }
  }

  std::size_t decompositions() const { return decompositions_; }

 private:
  struct Entry {
    double key;
    Eigen::VectorXd values[2];
    Matrix vectors[2];
  };

  const Entry& eigen_for(double Omega_sq) {
    for (const auto& e : cache_) {
      if (e.key == Omega_sq) return e;
    }
    Entry e;
    e.key = Omega_sq;
    for (int parity = 0; parity < 2; ++parity) {
      const auto& idx = index_[parity];
      const auto m = static_cast<Eigen::Index>(idx.size());
      Eigen::VectorXd diag(m), sub(std::max<Eigen::Index>(m - 1, 0));
      for (Eigen::Index i = 0; i < m; ++i) {
        diag(i) = 0.5 * (p2_(idx[i], idx[i]) + Omega_sq * q2_(idx[i], idx[i]));
        if (i + 1 < m) sub(i) = 0.5 * (p2_(idx[i], idx[i + 1]) + Omega_sq * q2_(idx[i], idx[i + 1]));
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
      solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
      if (solver.info() != Eigen::Success) throw NumericalError("tridiagonal eigendecomposition failed");
      e.values[parity] = solver.eigenvalues();
      e.vectors[parity] = solver.eigenvectors().cast<cplx>();
    }
    ++decompositions_;
    if (cache_.size() >= capacity_) cache_.pop_front();
    cache_.push_back(std::move(e));
    return cache_.back();
  }

  int N_;
  Eigen::MatrixXd q2_, p2_;
  std::vector<int> index_[2];
  std::size_t capacity_;
  std::deque<Entry> cache_;
  std::size_t decompositions_ = 0;
};

// ------------------------------------------------------------ direct

struct PropagationOptions {
  double tail_guard = 1e-6;
  bool throw_on_tail = false;
  std::optional<ErmakovInitial> init;  // frame for the invariant series; default equilibrium at grid.front()
  IntegratorOptions ode;
};

struct PropagationResult {
  std::vector<double> grid;
  std::vector<QuantumState> states;
  std::vector<CoefficientSample> coeffs;
  std::vector<double> expect_I, var_I, expect_Iu, expect_H, norm, tail_mass;
  double dt = 0.0;
  std::size_t steps = 0;
  std::size_t decompositions = 0;
  bool truncation_valid = true;
};

namespace detail {
inline std::vector<double> segment_cuts(double a, double b, const std::vector<double>& breakpoints) {
  std::vector<double> cuts{a};
  for (double bp : breakpoints) {
    if (bp > a && bp < b) cuts.push_back(bp);
  }
  cuts.push_back(b);
  return cuts;
}
}  // namespace detail

inline PropagationResult direct_propagate(const FockSpace& s, const FrequencyProfile& profile, const QuantumState& psi0,
                                          std::span<const double> grid, double dt,
                                          const PropagationOptions& opts = {}) {
  require_strictly_increasing(grid);
  if (psi0.dim() != s.dim) throw DomainError("dim mismatch between state and space");
  if (!(dt > 0) || !std::isfinite(dt)) throw DomainError("dt must be > 0");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (dt > (grid[i] - grid[i - 1]) * (1.0 + 1e-9)) throw DomainError("dt must not exceed the grid spacing");
  }

  PropagationResult r;
  r.grid.assign(grid.begin(), grid.end());
  r.dt = dt;
  const ErmakovInitial init = opts.init ? *opts.init : equilibrium_initial(profile, grid.front());
  r.coeffs = sample_coefficients(profile, grid, init, grid.front(), opts.ode);

  MagnusStepper stepper(s);
  const auto bps = profile.breakpoints();
  Vector psi = psi0.amplitudes();

  auto record = [&](std::size_t i) {
    const double nrm = psi.norm();
    if (!std::isfinite(nrm)) throw NumericalError("non-finite amplitudes at t=" + std::to_string(grid[i]));
    QuantumState st(psi);
    const auto& c = r.coeffs[i];
    const Operator I = ermakov_invariant_via_rho(s, c.rho, c.rhodot, c.G);
    const Operator Iu = build_orthogonal_sq_invariant(s, c.u2, c.u2dot);
    const Operator H = hamiltonian(s, c.Omega_sq);
    r.expect_I.push_back(expectation(st, I).real());
    r.var_I.push_back(variance(st, I));
    r.expect_Iu.push_back(expectation(st, Iu).real());
    r.expect_H.push_back(expectation(st, H).real());
    r.norm.push_back(nrm);
    r.tail_mass.push_back(st.tail_mass());
    if (st.tail_mass() > opts.tail_guard) {
      r.truncation_valid = false;
      if (opts.throw_on_tail) {
        throw NumericalError("truncation guard: tail mass " + std::to_string(st.tail_mass()) + " at t=" +
                             std::to_string(grid[i]));
      }
    }
    r.states.push_back(std::move(st));
  };

  record(0);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const auto cuts = detail::segment_cuts(grid[i - 1], grid[i], bps);
    for (std::size_t j = 1; j < cuts.size(); ++j) {
      const double len = cuts[j] - cuts[j - 1];
      const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(len / dt - 1e-9)));
      const double h = len / static_cast<double>(n);
      for (std::size_t k = 0; k < n; ++k) {
        const double tm = cuts[j - 1] + (static_cast<double>(k) + 0.5) * h;
        stepper.step(psi, profile.omega_sq(tm), h);
      }
      r.steps += n;
    }
    record(i);
  }
  r.decompositions = stepper.decompositions();
  return r;
}

// ------------------------------------------------------------ invariant route

struct InvariantPropagation {
  QuantumState state;
  double t = 0.0;
  double s_alpha = 0.0;   // accumulated phase of the chosen alpha
  double cropped_norm = 1.0;  // norm of the working-space result on the first N levels
  AlphaKind alpha_kind = AlphaKind::rho;
};

// Transformed invariant I0 = T I_alpha T^† (working space, cropped to N).
inline Operator transformed_invariant(const FockSpace& s, const CoefficientSample& c, AlphaKind kind,
                                      int work_dim = 0) {
  const FockSpace big = make_space(work_dim_for(s, work_dim));
  // Only the first N rows of T enter the cropped product.
  auto sandwich = [&s](const Operator& T, const Operator& I) {
    const Matrix top = T.matrix().topRows(s.dim);
    return Operator(top * I.matrix() * top.adjoint(), Basis::ReferenceOscillator, true);
  };
  if (kind == AlphaKind::rho) {
    return sandwich(build_T_operator(big, c.rho, c.rhodot), ermakov_invariant_via_rho(big, c.rho, c.rhodot, c.G));
  }
  if (!(c.u2 > 0)) throw DomainError("alpha = u needs u > 0");
  return sandwich(build_T_operator(big, c.u2, c.u2dot), build_orthogonal_sq_invariant(big, c.u2, c.u2dot));
}

// The alpha = u variant uses u = u2 and needs u2 > 0 on [t0, t]. Its phase
// s_u = integral dt / u2^2 equals -(u1/u2)/G evaluated between t0 and t.
inline InvariantPropagation invariant_propagate(const FockSpace& s, const FrequencyProfile& profile,
                                                ErmakovInitial init, const QuantumState& psi0, double t0, double t,
                                                AlphaKind kind = AlphaKind::rho, int work_dim = 0,
                                                const IntegratorOptions& opts = {}) {
  if (psi0.dim() != s.dim) throw DomainError("dim mismatch between state and space");
  if (!(t >= t0)) throw DomainError("invariant_propagate needs t >= t0");
  const int w = work_dim_for(s, work_dim);
  const FockSpace big = make_space(w);

  std::vector<double> times{t0};
  if (t > t0) times.push_back(t);
  const auto cs = sample_coefficients(profile, times, init, t0, opts);
  const CoefficientSample& c0 = cs.front();
  const CoefficientSample& c1 = cs.back();

  Operator T0, T1, I0;
  double phase = 0.0;
  if (kind == AlphaKind::rho) {
    T0 = build_T_operator(big, c0.rho, c0.rhodot);
    T1 = build_T_operator(big, c1.rho, c1.rhodot);
    I0 = 0.5 * ((c0.G * c0.G) * big.q2 + big.p2);
    phase = c1.s - c0.s;
  } else {
    // Sign changes of u2 on a fine grid.
    const auto probe = uniform_grid(t0, std::max(t, t0 + 1e-9), static_cast<std::size_t>(std::ceil((t - t0) / 0.005)) + 2);
    const auto [p1, p2] = orthogonal_pair(profile, probe, init.rho0, init.rhodot0, opts);
    for (double u : p2.u) {
      if (!(u > 0)) throw DomainError("u-zero crossing: alpha = u is singular on the interval");
    }
    T0 = build_T_operator(big, c0.u2, c0.u2dot);
    T1 = build_T_operator(big, c1.u2, c1.u2dot);
    I0 = 0.5 * big.p2;
    phase = -(c1.u1 / c1.u2 - c0.u1 / c0.u2) / c1.G;
  }
  const Operator U = unitary_exp(I0, -phase);
  const Vector out = T1.adjoint().matrix() * (U.matrix() * (T0.matrix() * embed(psi0.amplitudes(), w)));
  const Vector head = out.head(s.dim);
  InvariantPropagation r;
  r.cropped_norm = head.norm();
  r.state = QuantumState::normalized(head);
  r.t = t;
  r.s_alpha = phase;
  r.alpha_kind = kind;
  return r;
}

struct I0Report {
  std::vector<double> times;
  std::vector<double> residual;  // |I0(t) - I0(t0)| interior
  double max_residual = 0.0;
  int k = 0;
};

// Time-independence of I0 = T(t) I_alpha(t) T^†(t).
inline I0Report transformed_invariant_check(const FockSpace& s, const std::vector<CoefficientSample>& cs,
                                            AlphaKind kind = AlphaKind::rho, int k = -1, int work_dim = 0) {
  if (cs.empty()) throw DomainError("no coefficient samples");
  I0Report r;
  r.k = k >= 0 ? k : s.dim / 4;
  const Operator ref = transformed_invariant(s, cs.front(), kind, work_dim);
  for (const auto& c : cs) {
    const double res = interior_max_abs(transformed_invariant(s, c, kind, work_dim) - ref, r.k);
    r.times.push_back(c.t);
    r.residual.push_back(res);
    r.max_residual = std::max(r.max_residual, res);
  }
  return r;
}

// ------------------------------------------------------------ conservation

struct ConservationReport {
  double drift_I = 0.0, drift_var_I = 0.0, drift_Iu = 0.0, drift_H = 0.0;
  double delta_H = 0.0;  // <H>(end) - <H>(start)
  double norm_drift = 0.0;
  double max_population_drift = 0.0;
  std::vector<std::vector<double>> populations;  // [time][level]
  bool truncation_valid = true;
};

inline double series_drift(const std::vector<double>& v) {
  return max_abs_drift(std::span<const double>(v.data(), v.size()));
}

// Drifts of the conserved expectations and of the populations of the lowest
// `levels` eigenstates of I(t), taken from a direct diagonalization of I(t).
inline ConservationReport conservation_report(const FockSpace& s, const PropagationResult& r, int levels = 6) {
  ConservationReport c;
  c.drift_I = series_drift(r.expect_I);
  c.drift_var_I = series_drift(r.var_I);
  c.drift_Iu = series_drift(r.expect_Iu);
  c.drift_H = series_drift(r.expect_H);
  c.delta_H = r.expect_H.back() - r.expect_H.front();
  for (double n : r.norm) c.norm_drift = std::max(c.norm_drift, std::abs(n - 1.0));
  c.truncation_valid = r.truncation_valid;
  levels = std::min(levels, s.dim);
  for (std::size_t i = 0; i < r.states.size(); ++i) {
    const auto& cf = r.coeffs[i];
    const Operator I = ermakov_invariant_via_rho(s, cf.rho, cf.rhodot, cf.G);
    const auto eig = hermitian_eigen(I);
    std::vector<double> pops(levels);
    for (int n = 0; n < levels; ++n) pops[n] = std::norm(eig.vectors.col(n).dot(r.states[i].amplitudes()));
    c.populations.push_back(std::move(pops));
  }
  for (const auto& pops : c.populations) {
    for (int n = 0; n < levels; ++n) {
      c.max_population_drift = std::max(c.max_population_drift, std::abs(pops[n] - c.populations.front()[n]));
    }
  }
  return c;
}

inline nlohmann::json to_json(const ConservationReport& c) {
  return {{"drift_I", c.drift_I},         {"drift_var_I", c.drift_var_I},
          {"drift_Iu", c.drift_Iu},       {"drift_H", c.drift_H},
          {"delta_H", c.delta_H},         {"norm_drift", c.norm_drift},
          {"max_population_drift", c.max_population_drift}, {"truncation_valid", c.truncation_valid}};
}

// "t,expect_I,var_I,expect_H,norm,tail_mass"
inline void write_csv(std::ostream& os, const PropagationResult& r) {
  using detail::fmt17;
  os << "t,expect_I,var_I,expect_H,norm,tail_mass\n";
  for (std::size_t i = 0; i < r.grid.size(); ++i) {
    os << fmt17(r.grid[i]) << ',' << fmt17(r.expect_I[i]) << ',' << fmt17(r.var_I[i]) << ','
       << fmt17(r.expect_H[i]) << ',' << fmt17(r.norm[i]) << ',' << fmt17(r.tail_mass[i]) << '\n';
  }
}

}  // namespace ermakov
