#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nngp/version.hpp"

namespace nngp {

/// Static SVG plots for quick inspection. All quantitative results live in
/// the CSV/JSON outputs; these renderings are a convenience only.
namespace svg {

namespace detail {

inline std::string color_ramp(double t) {
  // dark blue -> yellow
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(30 + 225 * t);
  const int g = static_cast<int>(30 + 200 * t);
  const int b = static_cast<int>(120 - 90 * t);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

inline void open_doc(std::ofstream& out, const std::string& path, int w, int h,
                     const std::vector<std::pair<std::string, std::string>>& meta) {
  out.open(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<!-- nngp " << kVersion;
  for (const auto& [k, v] : meta) out << " " << k << "=" << v;
  out << " -->\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
}

}  // namespace detail

/// Heatmap over a (x grid) x (y grid) of values; NaN cells are grey.
inline void heatmap(const std::string& path, const std::vector<double>& xs,
                    const std::vector<double>& ys, const std::vector<std::vector<double>>& values,
                    const std::string& title,
                    const std::vector<std::pair<std::string, std::string>>& meta) {
  if (values.size() != ys.size()) throw std::invalid_argument("heatmap: row count mismatch");
  const int cell = 14, margin = 46;
  const int w = margin * 2 + cell * static_cast<int>(xs.size());
  const int h = margin * 2 + cell * static_cast<int>(ys.size());

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& row : values)
    for (double v : row)
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  const double span = hi > lo ? hi - lo : 1.0;

  std::ofstream out;
  detail::open_doc(out, path, w, h, meta);
  out << "<text x=\"" << margin << "\" y=\"18\" font-size=\"12\">" << title << "</text>\n";
  for (std::size_t yi = 0; yi < ys.size(); ++yi) {
    if (values[yi].size() != xs.size()) throw std::invalid_argument("heatmap: column count mismatch");
    for (std::size_t xi = 0; xi < xs.size(); ++xi) {
      const double v = values[yi][xi];
      const std::string fill =
          std::isfinite(v) ? detail::color_ramp((v - lo) / span) : std::string("#b0b0b0");
      // y axis increases upward
      const int px = margin + cell * static_cast<int>(xi);
      const int py = margin + cell * static_cast<int>(ys.size() - 1 - yi);
      out << "<rect x=\"" << px << "\" y=\"" << py << "\" width=\"" << cell << "\" height=\""
          << cell << "\" fill=\"" << fill << "\"/>\n";
    }
  }
  out << "<text x=\"" << margin << "\" y=\"" << h - 8 << "\" font-size=\"10\">x: " << xs.front()
      << " .. " << xs.back() << "   y: " << ys.front() << " .. " << ys.back() << "   v: " << lo
      << " .. " << hi << "</text>\n";
  out << "</svg>\n";
  if (!out) throw std::runtime_error("SVG write failure");
}

struct Series {
  std::string label;
  std::vector<double> ys;  // x is the index
};

/// Polyline chart of several series against their index (log10 when every
/// value is positive and the dynamic range is large).
inline void lines(const std::string& path, const std::vector<Series>& series,
                  const std::string& title,
                  const std::vector<std::pair<std::string, std::string>>& meta) {
  const int w = 560, h = 360, margin = 40;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::size_t max_len = 1;
  bool all_positive = true;
  for (const auto& s : series) {
    max_len = std::max(max_len, s.ys.size());
    for (double v : s.ys) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      all_positive = all_positive && v > 0.0;
    }
  }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  const bool log_scale = all_positive && hi / std::max(lo, 1e-300) > 1e3;
  auto transform = [&](double v) { return log_scale ? std::log10(v) : v; };
  const double tlo = transform(lo), thi = transform(hi);
  const double span = thi > tlo ? thi - tlo : 1.0;

  static const char* colors[] = {"#d62728", "#1f77b4", "#2ca02c", "#ff7f0e",
                                 "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
  std::ofstream out;
  detail::open_doc(out, path, w, h, meta);
  out << "<text x=\"" << margin << "\" y=\"18\" font-size=\"12\">" << title
      << (log_scale ? " (log10)" : "") << "</text>\n";
  out << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << w - 2 * margin
      << "\" height=\"" << h - 2 * margin << "\" fill=\"none\" stroke=\"#404040\"/>\n";
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    if (s.ys.empty()) continue;
    out << "<polyline fill=\"none\" stroke=\"" << colors[si % 8] << "\" points=\"";
    for (std::size_t i = 0; i < s.ys.size(); ++i) {
      if (!std::isfinite(s.ys[i])) break;
      const double fx = max_len > 1 ? static_cast<double>(i) / (max_len - 1) : 0.0;
      const double fy = (transform(s.ys[i]) - tlo) / span;
      out << margin + fx * (w - 2 * margin) << "," << h - margin - fy * (h - 2 * margin) << " ";
    }
    out << "\"/>\n";
    out << "<text x=\"" << w - margin + 2 << "\" y=\"" << margin + 14 * (si + 1)
        << "\" font-size=\"9\" fill=\"" << colors[si % 8] << "\">" << s.label << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) throw std::runtime_error("SVG write failure");
}

}  // namespace svg
}  // namespace nngp
