// classical.hpp: classical TDHO solutions, Ermakov amplitude/phase frames and
// the classical invariants built from them.
//
// Conventions: the orthogonal pair (u1, u2) is oriented so that
// u1 = -rho sin(s), u2 = rho cos(s); its Wronskian G = u1 u2' - u2 u1' is the
// orthogonal-functions invariant, normalized to 1 by the default initial
// conditions. omega(t) means the phase rate s' = G / rho^2 throughout.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ermakov/errors.hpp"
#include "ermakov/integrator.hpp"
#include "ermakov/profile.hpp"

namespace ermakov {

struct ClassicalTrajectory {
  std::vector<double> grid;
  std::vector<double> u;
  std::vector<double> udot;

  std::size_t size() const { return grid.size(); }
};

// Amplitude rho, its rate, the accumulated phase s and the phase rate s'.
struct ErmakovFrame {
  std::vector<double> grid;
  std::vector<double> rho;
  std::vector<double> rhodot;
  std::vector<double> s_rho;
  std::vector<double> sdot;

  std::size_t size() const { return grid.size(); }
};

struct ClassicalInvariantReport {
  double sigma = 0.0;
  double G = 0.0;  // (1 - sigma^2) rho^2 s' at the first sample
  std::vector<double> rho_sq_sdot;
  double drift_rho_sq_sdot = 0.0;
  std::vector<double> ermakov_I;  // rho^4 s'^2 / 2
  double drift_ermakov_I = 0.0;
};

// Initial amplitude for which the instantaneous ground state is the vacuum
// of the Lewis ladder: rho = Omega^{-1/2}, rho' = 0.
struct ErmakovInitial {
  double rho0 = 1.0;
  double rhodot0 = 0.0;
};

inline ErmakovInitial equilibrium_initial(const FrequencyProfile& profile, double t0 = 0.0) {
  return {1.0 / std::sqrt(profile.omega(t0)), 0.0};
}

inline double max_abs_drift(std::span<const double> series) {
  double d = 0.0;
  for (double v : series) d = std::max(d, std::abs(v - series.front()));
  return d;
}

// ------------------------------------------------------------------ integration

inline ClassicalTrajectory integrate_tdho(const FrequencyProfile& profile, double u0, double v0,
                                          std::span<const double> grid, const IntegratorOptions& opts = {}) {
  if (!std::isfinite(u0) || !std::isfinite(v0)) throw DomainError("u0 and v0 must be finite");
  auto rhs = [&profile](const std::array<double, 2>& x, std::array<double, 2>& d, double t) {
    d[0] = x[1];
    d[1] = -profile.omega_sq(t) * x[0];
  };
  const auto bps = profile.breakpoints();
  const auto states = integrate_on_grid<2>(rhs, {u0, v0}, grid, bps, opts);
  ClassicalTrajectory tr;
  tr.grid.assign(grid.begin(), grid.end());
  tr.u.reserve(states.size());
  tr.udot.reserve(states.size());
  for (const auto& s : states) {
    tr.u.push_back(s[0]);
    tr.udot.push_back(s[1]);
  }
  return tr;
}

// (u1, u2) with u1(t0) = 0, u1'(t0) = -1/rho0, u2(t0) = rho0, u2'(t0) = rho0',
// so that G = 1 and s(t0) = 0. Both solutions share one adaptive run.
inline std::pair<ClassicalTrajectory, ClassicalTrajectory> orthogonal_pair(const FrequencyProfile& profile,
                                                                           std::span<const double> grid,
                                                                           double rho0, double rhodot0,
                                                                           const IntegratorOptions& opts = {}) {
  if (!(rho0 > 0) || !std::isfinite(rho0)) throw DomainError("rho0 must be > 0");
  if (!std::isfinite(rhodot0)) throw DomainError("rhodot0 must be finite");
  auto rhs = [&profile](const std::array<double, 4>& x, std::array<double, 4>& d, double t) {
    const double w2 = profile.omega_sq(t);
    d[0] = x[1];
    d[1] = -w2 * x[0];
    d[2] = x[3];
    d[3] = -w2 * x[2];
  };
  const auto bps = profile.breakpoints();
  const auto states = integrate_on_grid<4>(rhs, {0.0, -1.0 / rho0, rho0, rhodot0}, grid, bps, opts);
  ClassicalTrajectory a, b;
  a.grid.assign(grid.begin(), grid.end());
  b.grid = a.grid;
  for (const auto& s : states) {
    a.u.push_back(s[0]);
    a.udot.push_back(s[1]);
    b.u.push_back(s[2]);
    b.udot.push_back(s[3]);
  }
  return {std::move(a), std::move(b)};
}

inline std::vector<double> wronskian(const ClassicalTrajectory& a, const ClassicalTrajectory& b) {
  if (a.grid != b.grid) throw DomainError("wronskian: trajectories live on different grids");
  std::vector<double> g(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) g[i] = a.u[i] * b.udot[i] - b.u[i] * a.udot[i];
  return g;
}

// Amplitude-phase frame of an orthogonal pair: rho = |(u1, u2)|, rho' from the
// pair, s the continuous angle with u1 = -rho sin s, u2 = rho cos s. The angle
// is unwrapped by picking, at each sample, the branch closest to a trapezoid
// estimate of the integral of G/rho^2; s' = G/rho^2 samplewise.
inline ErmakovFrame ermakov_from_pair(const ClassicalTrajectory& u1, const ClassicalTrajectory& u2) {
  const auto G = wronskian(u1, u2);
  constexpr double kRhoFloor = 1e-12;
  ErmakovFrame f;
  f.grid = u1.grid;
  const std::size_t n = u1.size();
  f.rho.resize(n);
  f.rhodot.resize(n);
  f.s_rho.resize(n);
  f.sdot.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(G[i]) < 1e-12) throw DomainError("degenerate pair: G=0 (linearly dependent solutions)");
    if (G[i] < 0) throw DomainError("pair has negative Wronskian; swap u1 and u2");
    const double rho = std::hypot(u1.u[i], u2.u[i]);
    if (rho < kRhoFloor) throw NumericalError("degenerate pair: rho below 1e-12");
    f.rho[i] = rho;
    f.rhodot[i] = (u1.u[i] * u1.udot[i] + u2.u[i] * u2.udot[i]) / rho;
    f.sdot[i] = G[i] / (rho * rho);
    const double angle = std::atan2(-u1.u[i], u2.u[i]);
    if (i == 0) {
      f.s_rho[i] = angle;
      continue;
    }
    const double estimate = f.s_rho[i - 1] + 0.5 * (f.sdot[i - 1] + f.sdot[i]) * (f.grid[i] - f.grid[i - 1]);
    const double turns = std::round((estimate - angle) / (2.0 * std::numbers::pi));
    f.s_rho[i] = angle + 2.0 * std::numbers::pi * turns;
  }
  return f;
}

// Jointly integrates rho'' + Omega^2 rho = rho^-3 and s' = rho^-2 (G = 1).
inline ErmakovFrame integrate_ermakov(const FrequencyProfile& profile, double rho0, double rhodot0,
                                      std::span<const double> grid, const IntegratorOptions& opts = {}) {
  if (!(rho0 > 0) || !std::isfinite(rho0)) throw DomainError("rho0 must be > 0");
  if (!std::isfinite(rhodot0)) throw DomainError("rhodot0 must be finite");
  auto rhs = [&profile](const std::array<double, 3>& x, std::array<double, 3>& d, double t) {
    const double rho = x[0];
    if (!(rho > 1e-12)) throw NumericalError("Ermakov amplitude collapsed to 0");
    const double inv2 = 1.0 / (rho * rho);
    d[0] = x[1];
    d[1] = -profile.omega_sq(t) * rho + inv2 / rho;
    d[2] = inv2;
  };
  const auto bps = profile.breakpoints();
  const auto states = integrate_on_grid<3>(rhs, {rho0, rhodot0, 0.0}, grid, bps, opts);
  ErmakovFrame f;
  f.grid.assign(grid.begin(), grid.end());
  for (const auto& s : states) {
    f.rho.push_back(s[0]);
    f.rhodot.push_back(s[1]);
    f.s_rho.push_back(s[2]);
    f.sdot.push_back(1.0 / (s[0] * s[0]));
  }
  return f;
}

// ------------------------------------------------------------------ invariants

inline ClassicalInvariantReport classical_invariants(const ErmakovFrame& frame, double sigma = 0.0) {
  if (!std::isfinite(sigma)) throw DomainError("sigma must be finite");
  if (std::abs(std::abs(sigma) - 1.0) < 1e-15) throw DomainError("sigma=±1 degenerate");
  if (frame.size() == 0) throw DomainError("empty frame");
  ClassicalInvariantReport r;
  r.sigma = sigma;
  r.rho_sq_sdot.resize(frame.size());
  r.ermakov_I.resize(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) {
    const double rho2 = frame.rho[i] * frame.rho[i];
    r.rho_sq_sdot[i] = rho2 * frame.sdot[i];
    r.ermakov_I[i] = 0.5 * r.rho_sq_sdot[i] * r.rho_sq_sdot[i];
  }
  r.G = (1.0 - sigma * sigma) * r.rho_sq_sdot.front();
  r.drift_rho_sq_sdot = max_abs_drift(r.rho_sq_sdot);
  r.drift_ermakov_I = max_abs_drift(r.ermakov_I);
  return r;
}

// u = rho e^{is} + sigma rho e^{-is}.
inline std::vector<std::complex<double>> polar_reconstruct(const ErmakovFrame& frame, double sigma) {
  std::vector<std::complex<double>> u(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) {
    const auto e = std::polar(1.0, frame.s_rho[i]);
    u[i] = frame.rho[i] * (e + sigma * std::conj(e));
  }
  return u;
}

// G^2/rho^2 + rho'^2 - (u1'^2 + u2'^2), samplewise; vanishes for a frame built
// from the same pair.
inline std::vector<double> pair_identity_residual(const ClassicalTrajectory& u1, const ClassicalTrajectory& u2,
                                                  const ErmakovFrame& frame) {
  const auto G = wronskian(u1, u2);
  std::vector<double> r(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) {
    const double rho = frame.rho[i];
    r[i] = G[i] * G[i] / (rho * rho) + frame.rhodot[i] * frame.rhodot[i] -
           (u1.udot[i] * u1.udot[i] + u2.udot[i] * u2.udot[i]);
  }
  return r;
}

// ------------------------------------------------------------------ residuals

// Centered 4th-order second derivative on a uniform grid. Entries whose
// stencil is incomplete (2 points at each end) or straddles a breakpoint are
// NaN. Throws on a non-uniform grid.
inline std::vector<double> second_derivative_4th(std::span<const double> grid, std::span<const double> f,
                                                 std::span<const double> breakpoints = {}) {
  const std::size_t n = grid.size();
  if (f.size() != n) throw DomainError("second_derivative_4th: size mismatch");
  if (n < 5) throw DomainError("second_derivative_4th: need at least 5 samples");
  const double h = (grid.back() - grid.front()) / static_cast<double>(n - 1);
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs((grid[i] - grid[i - 1]) - h) > 1e-9 * std::max(1.0, std::abs(h))) {
      throw DomainError("second_derivative_4th: grid must be uniform");
    }
  }
  std::vector<double> d(n, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 2; i + 2 < n; ++i) {
    bool straddles = false;
    for (double b : breakpoints) {
      if (b > grid[i - 2] && b < grid[i + 2]) straddles = true;
    }
    if (straddles) continue;
    d[i] = (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]) / (12.0 * h * h);
  }
  return d;
}

// Max over valid interior samples of |u'' + Omega^2 u|.
inline double tdho_residual(const FrequencyProfile& profile, std::span<const double> grid, std::span<const double> u) {
  const auto bps = profile.breakpoints();
  const auto d2 = second_derivative_4th(grid, u, bps);
  double r = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (std::isnan(d2[i])) continue;
    r = std::max(r, std::abs(d2[i] + profile.omega_sq(grid[i]) * u[i]));
  }
  return r;
}

// Max over valid interior samples of |rho'' + Omega^2 rho - rho^-3|.
inline double ermakov_residual(const FrequencyProfile& profile, const ErmakovFrame& frame) {
  const auto bps = profile.breakpoints();
  const auto d2 = second_derivative_4th(frame.grid, frame.rho, bps);
  double r = 0.0;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (std::isnan(d2[i])) continue;
    const double rho = frame.rho[i];
    r = std::max(r, std::abs(d2[i] + profile.omega_sq(frame.grid[i]) * rho - 1.0 / (rho * rho * rho)));
  }
  return r;
}

inline std::vector<double> uniform_grid(double t0, double t1, std::size_t points) {
  if (points < 2) throw DomainError("uniform_grid needs at least 2 points");
  if (!(t1 > t0)) throw DomainError("uniform_grid needs t1 > t0");
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i) {
    g[i] = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  g.back() = t1;
  return g;
}

// ------------------------------------------------------------------ sampling

// Every classical coefficient the operator modules need at one time.
struct CoefficientSample {
  double t = 0.0;
  double u1 = 0.0, u1dot = 0.0, u2 = 0.0, u2dot = 0.0;
  double rho = 1.0, rhodot = 0.0, s = 0.0;
  double omega = 1.0;    // s' = G / rho^2
  double Omega_sq = 1.0; // profile value
  double G = 1.0;        // Wronskian of (u1, u2) at t
};

// Samples the orthogonal pair and its frame at the requested times. The pair
// starts at t0 with rho(t0) = init.rho0; a background grid of spacing <=
// max_gap is merged in so the phase unwrapping never skips a turn.
inline std::vector<CoefficientSample> sample_coefficients(const FrequencyProfile& profile,
                                                          std::span<const double> times, ErmakovInitial init,
                                                          double t0 = 0.0, const IntegratorOptions& opts = {},
                                                          double max_gap = 0.05) {
  std::vector<double> req(times.begin(), times.end());
  for (double t : req) {
    if (!(t >= t0)) throw DomainError("sample_coefficients: times must be >= t0");
  }
  std::vector<double> grid{t0};
  const double t_end = req.empty() ? t0 : *std::max_element(req.begin(), req.end());
  if (t_end > t0) {
    const auto steps = static_cast<std::size_t>(std::ceil((t_end - t0) / max_gap));
    for (std::size_t i = 1; i <= steps; ++i) grid.push_back(t0 + (t_end - t0) * static_cast<double>(i) / steps);
  }
  grid.insert(grid.end(), req.begin(), req.end());
  std::sort(grid.begin(), grid.end());
  // merge samples closer than 1e-13 keeping requested times exact
  std::vector<double> merged;
  for (double t : grid) {
    if (!merged.empty() && std::abs(t - merged.back()) < 1e-13) {
      if (std::find(req.begin(), req.end(), t) != req.end()) merged.back() = t;
      continue;
    }
    merged.push_back(t);
  }
  if (merged.size() == 1) merged.push_back(t0 + max_gap);

  const auto [u1, u2] = orthogonal_pair(profile, merged, init.rho0, init.rhodot0, opts);
  const auto frame = ermakov_from_pair(u1, u2);
  std::vector<CoefficientSample> out;
  out.reserve(req.size());
  for (double t : req) {
    const auto it = std::lower_bound(merged.begin(), merged.end(), t);
    const auto i = static_cast<std::size_t>(it - merged.begin());
    CoefficientSample c;
    c.t = t;
    c.u1 = u1.u[i];
    c.u1dot = u1.udot[i];
    c.u2 = u2.u[i];
    c.u2dot = u2.udot[i];
    c.rho = frame.rho[i];
    c.rhodot = frame.rhodot[i];
    c.s = frame.s_rho[i];
    c.omega = frame.sdot[i];
    c.Omega_sq = profile.omega_sq(t);
    c.G = c.u1 * c.u2dot - c.u2 * c.u1dot;
    out.push_back(c);
  }
  return out;
}

inline CoefficientSample sample_coefficients_at(const FrequencyProfile& profile, double t, ErmakovInitial init,
                                                double t0 = 0.0, const IntegratorOptions& opts = {}) {
  const double times[] = {t};
  return sample_coefficients(profile, times, init, t0, opts).front();
}

// ------------------------------------------------------------------ CSV

namespace detail {
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace detail

inline void write_csv(std::ostream& os, const ClassicalTrajectory& tr) {
  os << "t,u,udot\n";
  for (std::size_t i = 0; i < tr.size(); ++i) {
    os << detail::fmt17(tr.grid[i]) << ',' << detail::fmt17(tr.u[i]) << ',' << detail::fmt17(tr.udot[i]) << '\n';
  }
}

inline void write_csv(std::ostream& os, const ErmakovFrame& f) {
  os << "t,rho,rhodot,s_rho\n";
  for (std::size_t i = 0; i < f.size(); ++i) {
    os << detail::fmt17(f.grid[i]) << ',' << detail::fmt17(f.rho[i]) << ',' << detail::fmt17(f.rhodot[i]) << ','
       << detail::fmt17(f.s_rho[i]) << '\n';
  }
}

}  // namespace ermakov
