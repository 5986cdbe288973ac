// modes.hpp: Manley-Rowe bookkeeping for frequency conversion.
//
// In the Lagrangian frame (following the excitation) n*omega is invariant, so
// a photon number converts as n2 = n1 omega1 / omega2. In the Eulerian frame
// (fixed point, steady state) a^† a is invariant and mode energies satisfy
// E_k / omega_k = const. Multi-mode delta relations are the pairwise closure
// of the two-mode ratio and are labelled as such in reports.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ermakov/classical.hpp"
#include "ermakov/errors.hpp"
#include "ermakov/fockspace.hpp"
#include "ermakov/invariants.hpp"
#include "ermakov/phase.hpp"

namespace ermakov {

enum class Process { SHG, SFG, DFG, ParametricAmp };
enum class Frame { Lagrangian, Eulerian };

inline std::string_view to_string(Process p) {
  switch (p) {
    case Process::SHG: return "SHG";
    case Process::SFG: return "SFG";
    case Process::DFG: return "DFG";
    case Process::ParametricAmp: return "ParametricAmp";
  }
  return "unknown";
}

inline std::string_view to_string(Frame f) { return f == Frame::Lagrangian ? "Lagrangian" : "Eulerian"; }

inline Process parse_process(std::string_view s) {
  if (s == "SHG") return Process::SHG;
  if (s == "SFG") return Process::SFG;
  if (s == "DFG") return Process::DFG;
  if (s == "ParametricAmp") return Process::ParametricAmp;
  throw ConfigError("unknown process '" + std::string(s) + "' at key 'process'");
}

inline Frame parse_frame(std::string_view s) {
  if (s == "Lagrangian") return Frame::Lagrangian;
  if (s == "Eulerian") return Frame::Eulerian;
  throw ConfigError("unknown frame '" + std::string(s) + "' at key 'frame'");
}

struct Mode {
  std::string label;
  double omega = 1.0;
  double photon_number = 0.0;
  std::optional<double> energy;  // defaults to photon_number * omega

  double energy_value() const { return energy ? *energy : photon_number * omega; }
};

inline constexpr double kModeTol = 1e-12;

inline std::size_t mode_count(Process p) { return p == Process::SHG ? 2 : 3; }

// Mode order: SHG (w1, w2); SFG (w1, w2, w3 = w1 + w2); DFG (w1, w2,
// w3 = w1 - w2); ParametricAmp (pump, signal, idler).
inline void check_frequencies(Process p, const std::vector<double>& w) {
  if (w.size() != mode_count(p)) {
    throw DomainError(std::string(to_string(p)) + " needs " + std::to_string(mode_count(p)) + " modes");
  }
  for (double x : w) {
    if (!(x > 0) || !std::isfinite(x)) throw DomainError("mode frequencies must be > 0");
  }
  auto close = [](double a, double b) { return std::abs(a - b) <= kModeTol * std::max({1.0, std::abs(a), std::abs(b)}); };
  bool ok = true;
  switch (p) {
    case Process::SHG: ok = close(w[1], 2.0 * w[0]); break;
    case Process::SFG: ok = close(w[2], w[0] + w[1]); break;
    case Process::DFG: ok = close(w[2], w[0] - w[1]); break;
    case Process::ParametricAmp: ok = close(w[0], w[1] + w[2]); break;
  }
  if (!ok) throw DomainError(std::string(to_string(p)) + " frequency constraint violated");
}

struct ModeLedger {
  std::vector<Mode> modes;
  Process process = Process::SHG;
  Frame frame = Frame::Lagrangian;

  std::vector<double> omegas() const {
    std::vector<double> w;
    for (const auto& m : modes) w.push_back(m.omega);
    return w;
  }
  void validate() const {
    for (const auto& m : modes) {
      if (!(m.photon_number >= 0)) throw DomainError("photon_number must be >= 0 for mode '" + m.label + "'");
    }
    check_frequencies(process, omegas());
  }
};

inline nlohmann::json to_json(const ModeLedger& l) {
  nlohmann::json modes = nlohmann::json::array();
  for (const auto& m : l.modes) {
    nlohmann::json j{{"label", m.label}, {"omega", m.omega}, {"photon_number", m.photon_number}};
    if (m.energy) j["energy"] = *m.energy;
    modes.push_back(j);
  }
  return {{"process", std::string(to_string(l.process))}, {"frame", std::string(to_string(l.frame))}, {"modes", modes}};
}

inline ModeLedger parse_ledger(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("ledger must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "process" && key != "frame" && key != "modes") throw ConfigError("unknown key '" + key + "' in ledger");
  }
  if (!j.contains("process") || !j["process"].is_string()) throw ConfigError("missing key 'process'");
  if (!j.contains("modes") || !j["modes"].is_array()) throw ConfigError("missing key 'modes'");
  ModeLedger l;
  l.process = parse_process(j["process"].get<std::string>());
  l.frame = j.contains("frame") ? parse_frame(j["frame"].get<std::string>()) : Frame::Lagrangian;
  for (const auto& m : j["modes"]) {
    Mode mode;
    for (const auto& [key, _] : m.items()) {
      if (key != "label" && key != "omega" && key != "photon_number" && key != "energy") {
        throw ConfigError("unknown key '" + key + "' in mode");
      }
    }
    mode.label = m.value("label", "");
    mode.omega = detail::require_number(m, "omega");
    mode.photon_number = m.contains("photon_number") ? detail::require_number(m, "photon_number") : 0.0;
    if (m.contains("energy")) mode.energy = detail::require_number(m, "energy");
    l.modes.push_back(std::move(mode));
  }
  try {
    l.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return l;
}

// ------------------------------------------------------------ Lagrangian

inline double convert_lagrangian(double n1, double omega1, double omega2) {
  if (!(omega1 > 0) || !(omega2 > 0)) throw DomainError("frequencies must be > 0");
  return n1 * omega1 / omega2;
}

// ------------------------------------------------------------ Eulerian

struct EulerianReport {
  std::vector<double> ratios;  // E_k / omega_k
  double deficit = 0.0;        // max ratio - min ratio
  bool pass = false;
  std::string detail;
  // SHG audit: two omega1 quanta per omega2 quantum.
  std::optional<double> shg_energy_in, shg_energy_out;
};

inline EulerianReport eulerian_energy_relation(const ModeLedger& l) {
  if (l.frame != Frame::Eulerian) throw DomainError("eulerian_energy_relation needs an Eulerian ledger");
  if (l.modes.empty()) throw DomainError("ledger has no modes");
  EulerianReport r;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& m : l.modes) {
    if (!(m.omega > 0)) throw DomainError("mode frequencies must be > 0");
    const double ratio = m.energy_value() / m.omega;
    r.ratios.push_back(ratio);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  r.deficit = hi - lo;
  r.pass = r.deficit <= kModeTol * std::max(1.0, std::abs(hi));
  if (!r.pass) r.detail = "E/omega differs across modes by " + std::to_string(r.deficit);
  if (l.process == Process::SHG && l.modes.size() == 2) {
    const double n = l.modes[1].energy_value() / l.modes[1].omega;
    r.shg_energy_in = 2.0 * n * l.modes[0].omega;
    r.shg_energy_out = n * l.modes[1].omega;
  }
  return r;
}

// ------------------------------------------------------------ Manley-Rowe

// Deltas implied by a change `driving_delta` of the first mode.
inline std::vector<double> manley_rowe_deltas(Process p, double driving_delta) {
  switch (p) {
    case Process::SHG: return {driving_delta, -0.5 * driving_delta};
    case Process::SFG: return {driving_delta, driving_delta, -driving_delta};
    case Process::DFG: return {driving_delta, -driving_delta, -driving_delta};
    case Process::ParametricAmp: return {driving_delta, -driving_delta, -driving_delta};
  }
  return {};
}

struct ManleyRoweReport {
  Process process = Process::SHG;
  std::vector<double> omegas, photon_numbers, deltas;
  double energy_balance = 0.0;  // sum omega_k delta_k
  double ratio_residual = 0.0;  // deviation from the pairwise delta relations
  bool pass = false;
  bool derived_beyond_two_modes = false;
};

inline ManleyRoweReport manley_rowe_audit(Process p, const std::vector<double>& omegas,
                                          const std::vector<double>& photon_numbers, const std::vector<double>& deltas) {
  check_frequencies(p, omegas);
  if (deltas.size() != omegas.size() || photon_numbers.size() != omegas.size()) {
    throw DomainError("modes, photon numbers and deltas must have the same length");
  }
  ManleyRoweReport r;
  r.process = p;
  r.omegas = omegas;
  r.photon_numbers = photon_numbers;
  r.deltas = deltas;
  r.derived_beyond_two_modes = omegas.size() > 2;
  double scale = 1.0;
  for (std::size_t k = 0; k < omegas.size(); ++k) {
    r.energy_balance += omegas[k] * deltas[k];
    scale = std::max(scale, std::abs(omegas[k] * deltas[k]));
  }
  const auto expected = manley_rowe_deltas(p, deltas[0]);
  for (std::size_t k = 0; k < deltas.size(); ++k) r.ratio_residual = std::max(r.ratio_residual, std::abs(deltas[k] - expected[k]));
  r.pass = std::abs(r.energy_balance) <= kModeTol * scale && r.ratio_residual <= kModeTol * scale;
  return r;
}

inline nlohmann::json to_json(const ManleyRoweReport& r) {
  return {{"process", std::string(to_string(r.process))},
          {"omegas", r.omegas},
          {"photon_numbers", r.photon_numbers},
          {"deltas", r.deltas},
          {"energy_balance", r.energy_balance},
          {"ratio_residual", r.ratio_residual},
          {"pass", r.pass},
          {"relation", r.derived_beyond_two_modes ? "pairwise closure of the two-mode ratio" : "two-mode ratio"}};
}

// "mode,omega,n,delta_n,omega_delta_n"
inline void write_audit_csv(std::ostream& os, const ManleyRoweReport& r) {
  using detail::fmt17;
  os << "mode,omega,n,delta_n,omega_delta_n\n";
  for (std::size_t k = 0; k < r.omegas.size(); ++k) {
    os << k + 1 << ',' << fmt17(r.omegas[k]) << ',' << fmt17(r.photon_numbers[k]) << ',' << fmt17(r.deltas[k]) << ','
       << fmt17(r.omegas[k] * r.deltas[k]) << '\n';
  }
}

// ------------------------------------------------------------ quantum demo

struct QuantumModeReport {
  double ladder_number_1 = 0.0, ladder_number_2 = 0.0;  // <a^† a> in each mode
  double n_hat_1 = 0.0, n_hat_2 = 0.0;                  // <a^† a>/omega
  double invariant_1 = 0.0, invariant_2 = 0.0;          // <I>
  double omega1 = 0.0, omega2 = 0.0;
  double scalar_prediction = 0.0;  // convert_lagrangian(n_hat_1, omega1, omega2)
  double mismatch = 0.0;           // |n_hat_2 - scalar_prediction|
  double invariant_drift = 0.0;    // |<I>_2 - <I>_1|
};

// One state, given by its amplitudes in the invariant number basis, read out
// in two frames (e.g. equilibrium frames at omega1 and omega2).
inline QuantumModeReport quantum_mode_demo(const FockSpace& s, const CoefficientSample& frame1,
                                           const CoefficientSample& frame2, const Vector& invariant_amplitudes,
                                           int work_dim = 0) {
  if (invariant_amplitudes.size() != s.dim) throw DomainError("dim mismatch between state and space");
  if (std::abs(frame1.G - frame2.G) > 1e-10) throw DomainError("frame mismatch: frames must share G");
  const int w = work_dim_for(s, work_dim);
  const FockSpace big = make_space(w);
  QuantumModeReport r;
  auto read = [&](const CoefficientSample& c, double& number, double& n_hat, double& inv) {
    if (!(c.omega > 0)) throw DomainError("omega must be > 0");
    const InvariantBasis b = invariant_basis(s, c, w);
    const QuantumState st = QuantumState::normalized(b.state_to_reference(invariant_amplitudes));
    const Ladder a = build_lewis_ladder(big, c.rho, c.rhodot, c.G);
    number = expectation(st, a.cre * a.ann).real();
    n_hat = number / c.omega;
    inv = expectation(st, ermakov_invariant_via_rho(big, c.rho, c.rhodot, c.G)).real();
  };
  read(frame1, r.ladder_number_1, r.n_hat_1, r.invariant_1);
  read(frame2, r.ladder_number_2, r.n_hat_2, r.invariant_2);
  r.omega1 = frame1.omega;
  r.omega2 = frame2.omega;
  r.scalar_prediction = convert_lagrangian(r.n_hat_1, r.omega1, r.omega2);
  r.mismatch = std::abs(r.n_hat_2 - r.scalar_prediction);
  r.invariant_drift = std::abs(r.invariant_2 - r.invariant_1);
  return r;
}

// Equilibrium frame of a constant oscillator at frequency omega.
inline CoefficientSample equilibrium_frame(double omega) {
  if (!(omega > 0)) throw DomainError("omega must be > 0");
  const double rho = 1.0 / std::sqrt(omega);
  CoefficientSample c;
  c.t = 0.0;
  c.u1 = 0.0;
  c.u1dot = -1.0 / rho;
  c.u2 = rho;
  c.u2dot = 0.0;
  c.rho = rho;
  c.rhodot = 0.0;
  c.s = 0.0;
  c.omega = 1.0 / (rho * rho);
  c.Omega_sq = omega * omega;
  c.G = 1.0;
  return c;
}

}  // namespace ermakov
