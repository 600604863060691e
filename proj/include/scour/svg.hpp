#pragma once

// Minimal static SVG charts: line/band plots and box plots.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "scour/stats.hpp"

namespace scour::svg {

struct Line {
  std::vector<double> x, y;
  std::string color = "#1f77b4";
  std::string label;
  bool dashed = false;
};

struct Band {
  std::vector<double> x, lower, upper;
  std::string color = "#1f77b4";
  double opacity = 0.25;
  std::string label;
};

struct Markers {
  std::vector<double> x, y;
  std::string color = "#d62728";
  std::string label;
};

struct Box {
  std::string label;
  stats::Summary s;
};

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[32];
  const double a = std::abs(v);
  if (a != 0.0 && (a >= 1e5 || a < 1e-3)) {
    std::snprintf(buf, sizeof buf, "%.2e", v);
  } else {
    std::snprintf(buf, sizeof buf, "%.4g", v);
  }
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '&': o += "&amp;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

inline std::vector<double> nice_ticks(double lo, double hi, int target = 6) {
  if (!(hi > lo)) return {lo};
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> t;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) t.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  return t;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
    const double p = 0.05 * (hi - lo);
    lo -= p;
    hi += p;
  }
};

}  // namespace detail

class Chart {
 public:
  Chart(std::string title, std::string xlabel, std::string ylabel, int width = 900, int height = 420)
      : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)), w_(width), h_(height) {}

  void add(Line l) { lines_.push_back(std::move(l)); }
  void add(Band b) { bands_.push_back(std::move(b)); }
  void add(Markers m) { markers_.push_back(std::move(m)); }

  std::string render() const {
    detail::Range xr, yr;
    for (const auto& l : lines_) {
      for (double v : l.x) xr.add(v);
      for (double v : l.y) yr.add(v);
    }
    for (const auto& b : bands_) {
      for (double v : b.x) xr.add(v);
      for (double v : b.lower) yr.add(v);
      for (double v : b.upper) yr.add(v);
    }
    for (const auto& m : markers_) {
      for (double v : m.x) xr.add(v);
      for (double v : m.y) yr.add(v);
    }
    yr.pad();
    if (!std::isfinite(xr.lo)) xr.lo = 0.0, xr.hi = 1.0;
    if (xr.hi - xr.lo < 1e-12) xr.hi = xr.lo + 1.0;

    const double l = 70, r = 160, t = 40, b = 50;
    const double pw = w_ - l - r, ph = h_ - t - b;
    auto X = [&](double v) { return l + (v - xr.lo) / (xr.hi - xr.lo) * pw; };
    auto Y = [&](double v) { return t + ph - (v - yr.lo) / (yr.hi - yr.lo) * ph; };
    using detail::num;

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_ << "\" height=\"" << h_
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << w_ / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << detail::escape(title_) << "</text>\n";
    for (double v : detail::nice_ticks(yr.lo, yr.hi)) {
      o << "<line x1=\"" << num(l) << "\" x2=\"" << num(l + pw) << "\" y1=\"" << num(Y(v)) << "\" y2=\"" << num(Y(v))
        << "\" stroke=\"#ddd\"/><text x=\"" << num(l - 6) << "\" y=\"" << num(Y(v) + 4) << "\" text-anchor=\"end\">"
        << detail::tick_label(v) << "</text>\n";
    }
    for (double v : detail::nice_ticks(xr.lo, xr.hi)) {
      o << "<line x1=\"" << num(X(v)) << "\" x2=\"" << num(X(v)) << "\" y1=\"" << num(t + ph) << "\" y2=\"" << num(t + ph + 4)
        << "\" stroke=\"black\"/><text x=\"" << num(X(v)) << "\" y=\"" << num(t + ph + 18) << "\" text-anchor=\"middle\">"
        << detail::tick_label(v) << "</text>\n";
    }
    o << "<rect x=\"" << num(l) << "\" y=\"" << num(t) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    o << "<text x=\"" << num(l + pw / 2) << "\" y=\"" << h_ - 10 << "\" text-anchor=\"middle\">" << detail::escape(xlabel_) << "</text>\n";
    o << "<text transform=\"translate(16," << num(t + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << detail::escape(ylabel_) << "</text>\n";

    for (const auto& band : bands_) {
      o << "<polygon fill=\"" << band.color << "\" fill-opacity=\"" << band.opacity << "\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < band.x.size(); ++i) o << num(X(band.x[i])) << ',' << num(Y(band.upper[i])) << ' ';
      for (std::size_t i = band.x.size(); i-- > 0;) o << num(X(band.x[i])) << ',' << num(Y(band.lower[i])) << ' ';
      o << "\"/>\n";
    }
    for (const auto& line : lines_) {
      o << "<polyline fill=\"none\" stroke=\"" << line.color << "\" stroke-width=\"1.2\"";
      if (line.dashed) o << " stroke-dasharray=\"5,3\"";
      o << " points=\"";
      for (std::size_t i = 0; i < line.x.size(); ++i) {
        if (std::isfinite(line.y[i])) o << num(X(line.x[i])) << ',' << num(Y(line.y[i])) << ' ';
      }
      o << "\"/>\n";
    }
    for (const auto& m : markers_) {
      for (std::size_t i = 0; i < m.x.size(); ++i) {
        o << "<circle cx=\"" << num(X(m.x[i])) << "\" cy=\"" << num(Y(m.y[i])) << "\" r=\"3\" fill=\"" << m.color << "\"/>\n";
      }
    }
    // Legend
    double ly = t + 10;
    auto legend = [&](const std::string& label, const std::string& color) {
      if (label.empty()) return;
      o << "<rect x=\"" << num(l + pw + 12) << "\" y=\"" << num(ly - 8) << "\" width=\"14\" height=\"8\" fill=\"" << color
        << "\"/><text x=\"" << num(l + pw + 30) << "\" y=\"" << num(ly) << "\">" << detail::escape(label) << "</text>\n";
      ly += 18;
    };
    for (const auto& x : lines_) legend(x.label, x.color);
    for (const auto& x : bands_) legend(x.label, x.color);
    for (const auto& x : markers_) legend(x.label, x.color);
    o << "</svg>\n";
    return o.str();
  }

 private:
  std::string title_, xlabel_, ylabel_;
  int w_, h_;
  std::vector<Line> lines_;
  std::vector<Band> bands_;
  std::vector<Markers> markers_;
};

/// Box plot: box from Q1 to Q3, median line, whiskers to min and max.
inline std::string box_plot(const std::string& title, const std::string& ylabel, const std::vector<Box>& boxes) {
  detail::Range yr;
  for (const auto& b : boxes) {
    yr.add(b.s.min);
    yr.add(b.s.max);
  }
  yr.pad();
  const double l = 70, r = 20, t = 40, b = 150;
  const double slot = 60;
  const double pw = std::max(200.0, slot * static_cast<double>(boxes.size()));
  const double ph = 300;
  const double w = l + pw + r, h = t + ph + b;
  auto Y = [&](double v) { return t + ph - (v - yr.lo) / (yr.hi - yr.lo) * ph; };
  using detail::num;
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w) << "\" height=\"" << num(h)
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << num(w / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << detail::escape(title) << "</text>\n";
  for (double v : detail::nice_ticks(yr.lo, yr.hi)) {
    o << "<line x1=\"" << num(l) << "\" x2=\"" << num(l + pw) << "\" y1=\"" << num(Y(v)) << "\" y2=\"" << num(Y(v))
      << "\" stroke=\"#ddd\"/><text x=\"" << num(l - 6) << "\" y=\"" << num(Y(v) + 4) << "\" text-anchor=\"end\">"
      << detail::tick_label(v) << "</text>\n";
  }
  o << "<text transform=\"translate(16," << num(t + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">" << detail::escape(ylabel)
    << "</text>\n";
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& s = boxes[i].s;
    const double cx = l + slot * (static_cast<double>(i) + 0.5);
    const double bw = slot * 0.5;
    o << "<line x1=\"" << num(cx) << "\" x2=\"" << num(cx) << "\" y1=\"" << num(Y(s.max)) << "\" y2=\"" << num(Y(s.min))
      << "\" stroke=\"black\"/>\n";
    o << "<rect x=\"" << num(cx - bw / 2) << "\" y=\"" << num(Y(s.q3)) << "\" width=\"" << num(bw) << "\" height=\""
      << num(std::max(0.5, Y(s.q1) - Y(s.q3))) << "\" fill=\"#9ecae1\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << num(cx - bw / 2) << "\" x2=\"" << num(cx + bw / 2) << "\" y1=\"" << num(Y(s.median)) << "\" y2=\""
      << num(Y(s.median)) << "\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
    o << "<text transform=\"translate(" << num(cx + 4) << "," << num(t + ph + 8) << ") rotate(60)\">"
      << detail::escape(boxes[i].label) << "</text>\n";
  }
  o << "<rect x=\"" << num(l) << "\" y=\"" << num(t) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
    << "\" fill=\"none\" stroke=\"black\"/>\n</svg>\n";
  return o.str();
}

}  // namespace scour::svg
