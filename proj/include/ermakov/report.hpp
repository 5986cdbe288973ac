// report.hpp: static SVG line plots, CSV time series and config hashing.
//
// Everything here is byte-deterministic: numbers go through snprintf with a
// fixed format and nothing depends on the clock or the locale.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ermakov/classical.hpp"
#include "ermakov/errors.hpp"

namespace ermakov {

struct Series {
  std::string label;
  std::vector<double> x, y;
};

struct SvgStyle {
  int width = 800;
  int height = 480;
  std::string title;
  std::string x_label = "t";
  std::string y_label;
  std::size_t max_points = 4000;
};

namespace detail {

inline std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  return colors[i % 6];
}

}  // namespace detail

// Min/max bucket decimation. Splits the samples into max_points/2 contiguous
// buckets and keeps, per bucket, the minimum and the maximum of y in their
// original order. Short series pass through untouched.
inline Series downsample(const Series& s, std::size_t max_points) {
  if (s.x.size() != s.y.size()) throw DomainError("series '" + s.label + "': x and y differ in length");
  if (max_points < 2) throw DomainError("max_points must be >= 2");
  const std::size_t n = s.x.size();
  if (n <= max_points) return s;
  const std::size_t buckets = max_points / 2;
  Series out{s.label, {}, {}};
  out.x.reserve(2 * buckets);
  out.y.reserve(2 * buckets);
  for (std::size_t b = 0; b < buckets; ++b) {
    const std::size_t lo = b * n / buckets;
    const std::size_t hi = (b + 1) * n / buckets;
    std::size_t imin = lo, imax = lo;
    for (std::size_t i = lo; i < hi; ++i) {
      if (s.y[i] < s.y[imin]) imin = i;
      if (s.y[i] > s.y[imax]) imax = i;
    }
    const std::size_t first = std::min(imin, imax), second = std::max(imin, imax);
    out.x.push_back(s.x[first]);
    out.y.push_back(s.y[first]);
    if (second != first) {
      out.x.push_back(s.x[second]);
      out.y.push_back(s.y[second]);
    }
  }
  return out;
}

inline std::string emit_svg(const std::vector<Series>& series, const SvgStyle& style = {}) {
  if (series.empty()) throw DomainError("emit_svg: no series");
  std::vector<Series> data;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    if (s.x.empty()) throw DomainError("emit_svg: series '" + s.label + "' is empty");
    data.push_back(downsample(s, style.max_points));
    for (std::size_t i = 0; i < data.back().x.size(); ++i) {
      const double x = data.back().x[i], y = data.back().y[i];
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (!std::isfinite(x0)) throw DomainError("emit_svg: no finite samples");
  if (x1 == x0) x1 = x0 + 1.0;
  // flat series still get a visible band
  if (y1 - y0 < 1e-12 * std::max(1.0, std::abs(y0))) {
    const double pad = std::max(1.0, std::abs(y0)) * 1e-3;
    y0 -= pad;
    y1 += pad;
  }

  const double W = style.width, H = style.height;
  const double left = 80, right = 160, top = 40, bottom = 50;
  const double pw = W - left - right, ph = H - top - bottom;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (y1 - y) / (y1 - y0) * ph; };
  using detail::fmt6;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << style.width << "\" height=\"" << style.height
     << "\" viewBox=\"0 0 " << style.width << ' ' << style.height << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << style.width << "\" height=\"" << style.height << "\" fill=\"white\"/>\n";
  if (!style.title.empty()) {
    os << "<text x=\"" << fmt6(left) << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">"
       << detail::xml_escape(style.title) << "</text>\n";
  }
  os << "<rect x=\"" << fmt6(left) << "\" y=\"" << fmt6(top) << "\" width=\"" << fmt6(pw) << "\" height=\"" << fmt6(ph)
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
    os << "<text x=\"" << fmt6(px(fx)) << "\" y=\"" << fmt6(top + ph + 18)
       << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << fmt6(fx) << "</text>\n";
    os << "<text x=\"" << fmt6(left - 6) << "\" y=\"" << fmt6(py(fy) + 4)
       << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << fmt6(fy) << "</text>\n";
  }
  os << "<text x=\"" << fmt6(left + pw / 2) << "\" y=\"" << fmt6(H - 10)
     << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" << detail::xml_escape(style.x_label)
     << "</text>\n";
  if (!style.y_label.empty()) {
    os << "<text x=\"14\" y=\"" << fmt6(top + ph / 2) << "\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 14 "
       << fmt6(top + ph / 2) << ")\" text-anchor=\"middle\">" << detail::xml_escape(style.y_label) << "</text>\n";
  }
  for (std::size_t k = 0; k < data.size(); ++k) {
    os << "<polyline fill=\"none\" stroke=\"" << detail::palette(k) << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < data[k].x.size(); ++i) {
      if (!std::isfinite(data[k].x[i]) || !std::isfinite(data[k].y[i])) continue;
      if (!first) os << ' ';
      os << fmt6(px(data[k].x[i])) << ',' << fmt6(py(data[k].y[i]));
      first = false;
    }
    os << "\"/>\n";
  }
  // legend
  for (std::size_t k = 0; k < data.size(); ++k) {
    const double ly = top + 14 + 18 * static_cast<double>(k);
    os << "<line x1=\"" << fmt6(left + pw + 12) << "\" y1=\"" << fmt6(ly) << "\" x2=\"" << fmt6(left + pw + 36)
       << "\" y2=\"" << fmt6(ly) << "\" stroke=\"" << detail::palette(k) << "\" stroke-width=\"2\"/>\n";
    os << "<text class=\"legend\" x=\"" << fmt6(left + pw + 42) << "\" y=\"" << fmt6(ly + 4)
       << "\" font-family=\"sans-serif\" font-size=\"12\">" << detail::xml_escape(data[k].label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

// FNV-1a, 64 bit.
inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Hash of the canonical dump (sorted keys, no whitespace).
inline std::string config_hash(const nlohmann::json& config) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(config.dump())));
  return buf;
}

// One x column and any number of y columns of equal length.
inline void write_series_csv(std::ostream& os, const std::string& x_name, const std::vector<double>& x,
                             const std::vector<Series>& columns) {
  os << x_name;
  for (const auto& c : columns) {
    if (c.y.size() != x.size()) throw DomainError("column '" + c.label + "' has the wrong length");
    os << ',' << c.label;
  }
  os << '\n';
  for (std::size_t i = 0; i < x.size(); ++i) {
    os << detail::fmt17(x[i]);
    for (const auto& c : columns) os << ',' << detail::fmt17(c.y[i]);
    os << '\n';
  }
}

}  // namespace ermakov
