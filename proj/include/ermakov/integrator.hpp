// integrator.hpp: adaptive ODE integration sampled on a caller-supplied grid.
//
// Thin layer over Boost.Odeint's controlled Runge-Kutta-Fehlberg 7(8). The
// stepper lands exactly on every grid time, never steps further than
// max_step, and restarts at every profile breakpoint so a Step discontinuity
// is never straddled by a single step.
#pragma once

#include <array>
#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "ermakov/errors.hpp"
#include "ermakov/profile.hpp"

namespace ermakov {

struct IntegratorOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  double max_step = 0.02;
  double initial_step = 1e-3;
};

inline void require_strictly_increasing(std::span<const double> grid, const char* what = "grid") {
  if (grid.empty()) throw DomainError(std::string(what) + " must not be empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i])) throw DomainError(std::string(what) + " holds a non-finite time");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw DomainError(std::string(what) + " must be strictly increasing");
  }
}

// Integrates x' = rhs(x, t) from grid.front() (where x(grid.front()) = x0) and
// returns the state at every grid point. Breakpoints in (front, back) split
// the integration into independent segments with the state carried over.
template <std::size_t Dim, class Rhs>
std::vector<std::array<double, Dim>> integrate_on_grid(const Rhs& rhs, std::array<double, Dim> x0,
                                                       std::span<const double> grid,
                                                       std::span<const double> breakpoints,
                                                       const IntegratorOptions& opts = {}) {
  namespace odeint = boost::numeric::odeint;
  using State = std::array<double, Dim>;
  require_strictly_increasing(grid);
  for (double v : x0) {
    if (!std::isfinite(v)) throw DomainError("initial state must be finite");
  }

  std::vector<State> out;
  out.reserve(grid.size());
  out.push_back(x0);
  if (grid.size() == 1) return out;

  // Segment boundaries: grid ends plus interior breakpoints.
  std::vector<double> cuts;
  for (double b : breakpoints) {
    if (b > grid.front() && b < grid.back()) cuts.push_back(b);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(grid.back());

  // Stage times are clamped below a breakpoint that closes the current
  // segment, so a right-continuous jump is seen only from its own side.
  double t_hi = std::numeric_limits<double>::infinity();
  auto system = [&rhs, &t_hi](const State& x, State& dxdt, double t) {
    rhs(x, dxdt, t < t_hi ? t : std::nextafter(t_hi, -std::numeric_limits<double>::infinity()));
  };

  State x = x0;
  double t_start = grid.front();
  std::size_t next = 1;  // next grid index to record
  for (double cut : cuts) {
    std::vector<double> times{t_start};
    std::vector<bool> record{false};
    while (next < grid.size() && grid[next] < cut) {
      times.push_back(grid[next++]);
      record.push_back(true);
    }
    const bool cut_on_grid = next < grid.size() && grid[next] == cut;
    times.push_back(cut);
    record.push_back(cut_on_grid);
    if (cut_on_grid) ++next;

    t_hi = cut < grid.back() ? cut : std::numeric_limits<double>::infinity();
    std::size_t obs_index = 0;
    auto observer = [&](const State& s, double t) {
      for (double v : s) {
        if (!std::isfinite(v)) throw NumericalError("non-finite state during integration at t=" + std::to_string(t));
      }
      if (record[obs_index]) out.push_back(s);
      ++obs_index;
    };
    try {
      auto stepper = odeint::make_controlled(opts.abs_tol, opts.rel_tol, opts.max_step,
                                             odeint::runge_kutta_fehlberg78<State>());
      odeint::integrate_times(stepper, system, x, times.begin(), times.end(),
                              std::min(opts.initial_step, times.back() - times.front()), observer);
    } catch (const odeint::odeint_error& e) {
      throw NumericalError(std::string("tolerance failure: ") + e.what());
    }
    t_start = cut;
  }
  return out;
}

}  // namespace ermakov
