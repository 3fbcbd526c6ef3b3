#ifndef LAGFLOW_IO_SVG_HPP
#define LAGFLOW_IO_SVG_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "lagflow/core/errors.hpp"

namespace lagflow {

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
  std::string color = "#1f77b4";
  bool dashed = false;
  bool right_axis = false;  ///< scaled against the secondary axis
  bool points = false;      ///< dots instead of a polyline
};

/** \brief Line-segment list drawn as-is, e.g. a contour. */
struct PlotSegments {
  std::string color = "#000000";
  std::string label;
  std::vector<std::array<double, 4>> segments;  ///< x0, y0, x1, y1
};

struct Plot {
  std::string title, xlabel, ylabel, y2label;
  std::vector<PlotSeries> series;
  std::vector<PlotSegments> segments;
  bool equal_aspect = false;
  bool log_y = false;
};

namespace detail {

struct Range {
  double lo = std::numeric_limits<double>::infinity(), hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(lo <= hi)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-300 * std::max(1.0, std::abs(hi))) {
      const double d = lo == 0.0 ? 1.0 : 0.05 * std::abs(lo);
      lo -= d;
      hi += d;
    }
  }
};

inline std::string num(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.6g", v);
  return b;
}

inline std::string tick(double v, double span) {
  if (std::abs(v) < 1e-9 * span) v = 0.0;
  char b[32];
  std::snprintf(b, sizeof b, "%.4g", v);
  return b;
}

inline std::string esc(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

} // namespace detail

/// Renders \p p as a standalone SVG document.
inline std::string render_svg(const Plot& p) {
  const double W = 720, H = 460, L = 80, R = p.y2label.empty() ? 30 : 80, T = 40, B = 60;
  detail::Range rx, ry, ry2;
  auto ty = [&](double v) { return p.log_y ? (v > 0.0 ? std::log10(v) : std::nan("")) : v; };
  for (const auto& s : p.series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      rx.add(s.x[i]);
      (s.right_axis ? ry2 : ry).add(s.right_axis ? s.y[i] : ty(s.y[i]));
    }
  for (const auto& g : p.segments)
    for (const auto& s : g.segments) {
      rx.add(s[0]);
      rx.add(s[2]);
      ry.add(s[1]);
      ry.add(s[3]);
    }
  rx.finish();
  ry.finish();
  ry2.finish();
  double pw = W - L - R, ph = H - T - B;
  if (p.equal_aspect) {
    const double sx = pw / (rx.hi - rx.lo), sy = ph / (ry.hi - ry.lo), s = std::min(sx, sy);
    const double cx = 0.5 * (rx.lo + rx.hi), cy = 0.5 * (ry.lo + ry.hi);
    rx.lo = cx - 0.5 * pw / s, rx.hi = cx + 0.5 * pw / s;
    ry.lo = cy - 0.5 * ph / s, ry.hi = cy + 0.5 * ph / s;
  }
  auto X = [&](double v) { return L + (v - rx.lo) / (rx.hi - rx.lo) * pw; };
  auto Y = [&](double v) { return T + ph - (v - ry.lo) / (ry.hi - ry.lo) * ph; };
  auto Y2 = [&](double v) { return T + ph - (v - ry2.lo) / (ry2.hi - ry2.lo) * ph; };

  std::string o = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::num(W) + "\" height=\"" +
                  detail::num(H) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += "<text x=\"" + detail::num(W / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
       detail::esc(p.title) + "</text>\n";
  o += "<rect x=\"" + detail::num(L) + "\" y=\"" + detail::num(T) + "\" width=\"" + detail::num(pw) + "\" height=\"" +
       detail::num(ph) + "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double vx = rx.lo + (rx.hi - rx.lo) * k / 5.0, vy = ry.lo + (ry.hi - ry.lo) * k / 5.0;
    o += "<text x=\"" + detail::num(X(vx)) + "\" y=\"" + detail::num(T + ph + 18) + "\" text-anchor=\"middle\">" +
         detail::tick(vx, rx.hi - rx.lo) + "</text>\n";
    o += "<text x=\"" + detail::num(L - 6) + "\" y=\"" + detail::num(Y(vy) + 4) + "\" text-anchor=\"end\">" +
         (p.log_y ? "1e" + detail::tick(vy, ry.hi - ry.lo) : detail::tick(vy, ry.hi - ry.lo)) + "</text>\n";
    if (!p.y2label.empty()) {
      const double v2 = ry2.lo + (ry2.hi - ry2.lo) * k / 5.0;
      o += "<text x=\"" + detail::num(L + pw + 6) + "\" y=\"" + detail::num(Y2(v2) + 4) + "\">" + detail::tick(v2, ry2.hi - ry2.lo) +
           "</text>\n";
    }
  }
  o += "<text x=\"" + detail::num(L + pw / 2) + "\" y=\"" + detail::num(H - 18) + "\" text-anchor=\"middle\">" +
       detail::esc(p.xlabel) + "</text>\n";
  o += "<text transform=\"translate(18," + detail::num(T + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
       detail::esc(p.ylabel) + "</text>\n";
  if (!p.y2label.empty())
    o += "<text transform=\"translate(" + detail::num(W - 14) + "," + detail::num(T + ph / 2) +
         ") rotate(90)\" text-anchor=\"middle\">" + detail::esc(p.y2label) + "</text>\n";
  for (const auto& g : p.segments) {
    o += "<g stroke=\"" + g.color + "\" stroke-width=\"1.2\">\n";
    for (const auto& s : g.segments)
      o += "<line x1=\"" + detail::num(X(s[0])) + "\" y1=\"" + detail::num(Y(s[1])) + "\" x2=\"" +
           detail::num(X(s[2])) + "\" y2=\"" + detail::num(Y(s[3])) + "\"/>\n";
    o += "</g>\n";
  }
  double ly = T + 16;
  for (const auto& g : p.segments) {
    if (g.label.empty()) continue;
    o += "<line x1=\"" + detail::num(L + pw - 150) + "\" y1=\"" + detail::num(ly - 4) + "\" x2=\"" +
         detail::num(L + pw - 125) + "\" y2=\"" + detail::num(ly - 4) + "\" stroke=\"" + g.color +
         "\" stroke-width=\"2\"/>\n";
    o += "<text x=\"" + detail::num(L + pw - 120) + "\" y=\"" + detail::num(ly) + "\">" + detail::esc(g.label) +
         "</text>\n";
    ly += 16;
  }
  for (const auto& s : p.series) {
    auto yy = [&](double v) { return s.right_axis ? Y2(v) : Y(ty(v)); };
    if (s.points) {
      o += "<g fill=\"" + s.color + "\">\n";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        if (std::isfinite(yy(s.y[i])))
          o += "<circle cx=\"" + detail::num(X(s.x[i])) + "\" cy=\"" + detail::num(yy(s.y[i])) + "\" r=\"1.2\"/>\n";
      o += "</g>\n";
    } else {
      o += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1.5\"" +
           (s.dashed ? " stroke-dasharray=\"6,4\"" : "") + " points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        if (std::isfinite(yy(s.y[i]))) o += detail::num(X(s.x[i])) + "," + detail::num(yy(s.y[i])) + " ";
      o += "\"/>\n";
    }
    if (!s.label.empty()) {
      o += "<line x1=\"" + detail::num(L + pw - 150) + "\" y1=\"" + detail::num(ly - 4) + "\" x2=\"" +
           detail::num(L + pw - 125) + "\" y2=\"" + detail::num(ly - 4) + "\" stroke=\"" + s.color +
           "\" stroke-width=\"2\"" + (s.dashed ? " stroke-dasharray=\"6,4\"" : "") + "/>\n";
      o += "<text x=\"" + detail::num(L + pw - 120) + "\" y=\"" + detail::num(ly) + "\">" + detail::esc(s.label) +
           "</text>\n";
      ly += 16;
    }
  }
  o += "</svg>\n";
  return o;
}

inline void write_svg(const std::string& path, const Plot& p) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path);
  f << render_svg(p);
}

} // namespace lagflow

#endif
