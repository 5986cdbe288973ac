// profile.hpp: time-dependent squared frequency Ω²(t) of the oscillator.
//
// Five families are supported: constant, a right-continuous step, a linear
// ramp of Ω², a smooth tanh sweep of Ω between two values, and a tabulated
// Ω² table evaluated by monotone cubic (PCHIP) interpolation. Profiles are
// immutable values; evaluation is a pure function of t.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

// pchip.hpp calls isnan unqualified; math.h puts it in the global namespace.
#include <math.h>

#include <boost/math/interpolators/pchip.hpp>
#include <nlohmann/json.hpp>

#include "ermakov/errors.hpp"

namespace ermakov {

enum class ProfileKind { Constant, Step, LinearRampOfOmegaSq, SmoothTanhSweep, Tabulated };

inline std::string_view to_string(ProfileKind k) {
  switch (k) {
    case ProfileKind::Constant: return "constant";
    case ProfileKind::Step: return "step";
    case ProfileKind::LinearRampOfOmegaSq: return "linear_ramp";
    case ProfileKind::SmoothTanhSweep: return "tanh_sweep";
    case ProfileKind::Tabulated: return "tabulated";
  }
  return "unknown";
}

class FrequencyProfile {
 public:
  struct Constant { double omega0; };
  struct Step { double omega0, omega1, t_step; };
  struct LinearRamp { double omega0_sq, slope; };
  struct TanhSweep { double omega0, omega1, t_center, width; };
  struct Tabulated {
    std::vector<double> t, omega_sq;
    boost::math::interpolators::pchip<std::vector<double>> interp;
  };
  using Params = std::variant<Constant, Step, LinearRamp, TanhSweep, Tabulated>;

  static FrequencyProfile constant(double omega0) {
    require_positive("omega0", omega0);
    return FrequencyProfile(Constant{omega0});
  }

  static FrequencyProfile step(double omega0, double omega1, double t_step) {
    require_positive("omega0", omega0);
    require_positive("omega1", omega1);
    require_finite("t_step", t_step);
    return FrequencyProfile(Step{omega0, omega1, t_step});
  }

  static FrequencyProfile linear_ramp(double omega0_sq, double slope) {
    require_positive("omega0_sq", omega0_sq);
    require_finite("slope", slope);
    return FrequencyProfile(LinearRamp{omega0_sq, slope});
  }

  static FrequencyProfile tanh_sweep(double omega0, double omega1, double t_center, double width) {
    require_positive("omega0", omega0);
    require_positive("omega1", omega1);
    require_finite("t_center", t_center);
    require_positive("width", width);
    return FrequencyProfile(TanhSweep{omega0, omega1, t_center, width});
  }

  // At least four samples (PCHIP needs them); t strictly increasing; Ω² > 0.
  static FrequencyProfile tabulated(std::vector<double> t, std::vector<double> omega_sq) {
    if (t.size() != omega_sq.size()) {
      throw ConfigError("t and omega_sq must have the same length");
    }
    if (t.size() < 4) {
      throw ConfigError("t must hold at least 4 samples");
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
      require_finite("t", t[i]);
      require_positive("omega_sq", omega_sq[i]);
      if (i > 0 && !(t[i] > t[i - 1])) {
        throw ConfigError("t must be strictly increasing");
      }
    }
    auto tx = t;
    auto ty = omega_sq;
    boost::math::interpolators::pchip<std::vector<double>> interp(std::move(tx), std::move(ty));
    return FrequencyProfile(Tabulated{std::move(t), std::move(omega_sq), std::move(interp)});
  }

  ProfileKind kind() const { return static_cast<ProfileKind>(params_.index()); }
  const Params& params() const { return params_; }

  // Open interval of valid t; ±inf when unbounded.
  std::pair<double, double> domain() const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (const auto* r = std::get_if<LinearRamp>(&params_)) {
      if (r->slope > 0) return {-r->omega0_sq / r->slope, inf};
      if (r->slope < 0) return {-inf, -r->omega0_sq / r->slope};
    }
    if (const auto* tab = std::get_if<Tabulated>(&params_)) {
      return {tab->t.front(), tab->t.back()};
    }
    return {-inf, inf};
  }

  bool contains(double t) const {
    const auto [lo, hi] = domain();
    if (kind() == ProfileKind::Tabulated) return t >= lo && t <= hi;
    return t > lo && t < hi;
  }

  double omega_sq(double t) const {
    if (!std::isfinite(t)) throw DomainError("profile evaluated at non-finite t");
    if (!contains(t)) {
      throw DomainError("t=" + std::to_string(t) + " outside the " + std::string(to_string(kind())) +
                        " profile domain");
    }
    return std::visit([t](const auto& p) { return eval(p, t); }, params_);
  }

  double omega(double t) const { return std::sqrt(omega_sq(t)); }

  // Times at which Ω² is discontinuous; integrators restart there.
  std::vector<double> breakpoints() const {
    if (const auto* s = std::get_if<Step>(&params_)) return {s->t_step};
    return {};
  }

 private:
  explicit FrequencyProfile(Params p) : params_(std::move(p)) {}

  static void require_finite(const char* key, double v) {
    if (!std::isfinite(v)) throw ConfigError(std::string(key) + " must be finite");
  }
  static void require_positive(const char* key, double v) {
    require_finite(key, v);
    if (!(v > 0)) throw ConfigError(std::string(key) + " must be > 0");
  }

  static double eval(const Constant& p, double) { return p.omega0 * p.omega0; }
  static double eval(const Step& p, double t) {
    const double w = t < p.t_step ? p.omega0 : p.omega1;
    return w * w;
  }
  static double eval(const LinearRamp& p, double t) { return p.omega0_sq + p.slope * t; }
  static double eval(const TanhSweep& p, double t) {
    const double frac = 0.5 * (1.0 + std::tanh((t - p.t_center) / p.width));
    const double w = p.omega0 + (p.omega1 - p.omega0) * frac;
    return w * w;
  }
  static double eval(const Tabulated& p, double t) { return p.interp(t); }

  Params params_;
};

// ---------------------------------------------------------------- JSON schema

namespace detail {

inline double require_number(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing key '") + key + "'");
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(std::string("key '") + key + "' must be a number");
  return v.get<double>();
}

inline std::vector<double> require_array(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing key '") + key + "'");
  const auto& v = j.at(key);
  if (!v.is_array()) throw ConfigError(std::string("key '") + key + "' must be an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError(std::string("key '") + key + "' must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, _] : j.items()) {
    if (key == "kind") continue;
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown key '" + key + "' for profile kind '" + j.at("kind").get<std::string>() + "'");
    }
  }
}

}  // namespace detail

inline FrequencyProfile parse_profile(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("profile must be a JSON object");
  if (!j.contains("kind") || !j.at("kind").is_string()) throw ConfigError("missing key 'kind'");
  const auto kind = j.at("kind").get<std::string>();
  using detail::require_array;
  using detail::require_number;
  if (kind == "constant") {
    detail::reject_unknown_keys(j, {"omega0"});
    return FrequencyProfile::constant(require_number(j, "omega0"));
  }
  if (kind == "step") {
    detail::reject_unknown_keys(j, {"omega0", "omega1", "t_step"});
    return FrequencyProfile::step(require_number(j, "omega0"), require_number(j, "omega1"),
                                  require_number(j, "t_step"));
  }
  if (kind == "linear_ramp") {
    detail::reject_unknown_keys(j, {"omega0_sq", "slope"});
    return FrequencyProfile::linear_ramp(require_number(j, "omega0_sq"), require_number(j, "slope"));
  }
  if (kind == "tanh_sweep") {
    detail::reject_unknown_keys(j, {"omega0", "omega1", "t_center", "width"});
    return FrequencyProfile::tanh_sweep(require_number(j, "omega0"), require_number(j, "omega1"),
                                        require_number(j, "t_center"), require_number(j, "width"));
  }
  if (kind == "tabulated") {
    detail::reject_unknown_keys(j, {"t", "omega_sq"});
    return FrequencyProfile::tabulated(require_array(j, "t"), require_array(j, "omega_sq"));
  }
  throw ConfigError("unknown profile kind '" + kind + "' at key 'kind'");
}

inline FrequencyProfile parse_profile(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("profile is not valid JSON: ") + e.what());
  }
  return parse_profile(j);
}

inline nlohmann::json to_json(const FrequencyProfile& p) {
  nlohmann::json j;
  j["kind"] = std::string(to_string(p.kind()));
  std::visit(
      [&j](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, FrequencyProfile::Constant>) {
          j["omega0"] = v.omega0;
        } else if constexpr (std::is_same_v<T, FrequencyProfile::Step>) {
          j["omega0"] = v.omega0;
          j["omega1"] = v.omega1;
          j["t_step"] = v.t_step;
        } else if constexpr (std::is_same_v<T, FrequencyProfile::LinearRamp>) {
          j["omega0_sq"] = v.omega0_sq;
          j["slope"] = v.slope;
        } else if constexpr (std::is_same_v<T, FrequencyProfile::TanhSweep>) {
          j["omega0"] = v.omega0;
          j["omega1"] = v.omega1;
          j["t_center"] = v.t_center;
          j["width"] = v.width;
        } else {
          j["t"] = v.t;
          j["omega_sq"] = v.omega_sq;
        }
      },
      p.params());
  return j;
}

}  // namespace ermakov
