#pragma once

// Minimal SVG figures: a grid of panels with line, band, scatter, bar and
// heatmap layers, auto-scaled axes and a legend.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ppc/harness/csv.hpp"

namespace ppc::harness::svg {

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

/// Keeps at most ~2 * buckets points, retaining each bucket's min and max
/// so short pulses survive.
inline std::pair<std::vector<double>, std::vector<double>> decimate(const std::vector<double>& x,
                                                                   const std::vector<double>& y,
                                                                   std::size_t buckets = 1500) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n <= 2 * buckets) return {{x.begin(), x.begin() + static_cast<long>(n)},
                                {y.begin(), y.begin() + static_cast<long>(n)}};
  std::vector<double> ox;
  std::vector<double> oy;
  for (std::size_t b = 0; b < buckets; ++b) {
    const std::size_t lo = b * n / buckets;
    const std::size_t hi = (b + 1) * n / buckets;
    std::size_t imin = lo;
    std::size_t imax = lo;
    for (std::size_t i = lo; i < hi; ++i) {
      if (!std::isfinite(y[i])) continue;
      if (!std::isfinite(y[imin]) || y[i] < y[imin]) imin = i;
      if (!std::isfinite(y[imax]) || y[i] > y[imax]) imax = i;
    }
    for (std::size_t i : {std::min(imin, imax), std::max(imin, imax)}) {
      if (!ox.empty() && ox.back() == x[i]) continue;
      ox.push_back(x[i]);
      oy.push_back(y[i]);
    }
  }
  return {ox, oy};
}

struct Layer {
  enum class Kind { kLine, kBand, kScatter, kBars };
  Kind kind = Kind::kLine;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> y2;  // band upper edge
  std::string color = "#1f77b4";
  std::string label;
  double width = 1.2;
  double opacity = 1.0;
  bool dashed = false;
  bool step = false;  // draw lines as a staircase
};

struct Heatmap {
  std::vector<double> x;   // column centres (time)
  std::vector<double> y;   // row centres (preferred stimulus)
  Eigen::MatrixXd values;  // values(row, col)
  std::string label;
};

class Panel {
 public:
  explicit Panel(std::string title = {}, std::string xlabel = {}, std::string ylabel = {})
      : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

  Panel& line(std::vector<double> x, std::vector<double> y, std::string color,
              std::string label = {}, double width = 1.2, bool dashed = false) {
    Layer l;
    l.x = std::move(x);
    l.y = std::move(y);
    l.color = std::move(color);
    l.label = std::move(label);
    l.width = width;
    l.dashed = dashed;
    layers_.push_back(std::move(l));
    return *this;
  }
  Panel& steps(std::vector<double> x, std::vector<double> y, std::string color,
               std::string label = {}, double width = 1.2) {
    line(std::move(x), std::move(y), std::move(color), std::move(label), width);
    layers_.back().step = true;
    return *this;
  }
  Panel& band(std::vector<double> x, std::vector<double> lo, std::vector<double> hi,
              std::string color, std::string label = {}, double opacity = 0.25) {
    Layer l;
    l.kind = Layer::Kind::kBand;
    l.x = std::move(x);
    l.y = std::move(lo);
    l.y2 = std::move(hi);
    l.color = std::move(color);
    l.label = std::move(label);
    l.opacity = opacity;
    layers_.push_back(std::move(l));
    return *this;
  }
  Panel& scatter(std::vector<double> x, std::vector<double> y, std::string color,
                 std::string label = {}, double radius = 1.2, double opacity = 0.7) {
    Layer l;
    l.kind = Layer::Kind::kScatter;
    l.x = std::move(x);
    l.y = std::move(y);
    l.color = std::move(color);
    l.label = std::move(label);
    l.width = radius;
    l.opacity = opacity;
    layers_.push_back(std::move(l));
    return *this;
  }
  Panel& bars(std::vector<double> x, std::vector<double> y, std::string color,
              std::string label = {}, double opacity = 0.8) {
    Layer l;
    l.kind = Layer::Kind::kBars;
    l.x = std::move(x);
    l.y = std::move(y);
    l.color = std::move(color);
    l.label = std::move(label);
    l.opacity = opacity;
    layers_.push_back(std::move(l));
    return *this;
  }
  Panel& heatmap(Heatmap h) {
    heatmap_ = std::move(h);
    return *this;
  }
  Panel& ylim(double lo, double hi) {
    ylim_ = {lo, hi};
    return *this;
  }
  Panel& xlim(double lo, double hi) {
    xlim_ = {lo, hi};
    return *this;
  }

  void render(std::ostream& out, double ox, double oy, double w, double h) const;

 private:
  std::pair<double, double> range(bool horizontal) const;

  std::string title_;
  std::string xlabel_;
  std::string ylabel_;
  std::vector<Layer> layers_;
  std::optional<Heatmap> heatmap_;
  std::optional<std::pair<double, double>> xlim_;
  std::optional<std::pair<double, double>> ylim_;
};

/// Roughly five round tick values covering [lo, hi].
inline std::vector<double> nice_ticks(double lo, double hi) {
  const double span = hi - lo;
  if (!(span > 0.0)) return {lo};
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step - 1e-9) * step; t <= hi + step * 1e-9; t += step)
    ticks.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
  return ticks;
}

inline std::pair<double, double> Panel::range(bool horizontal) const {
  if (horizontal && xlim_) return *xlim_;
  if (!horizontal && ylim_) return *ylim_;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  auto take = [&](const std::vector<double>& v) {
    for (double d : v)
      if (std::isfinite(d)) {
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
  };
  for (const auto& l : layers_) {
    if (horizontal) {
      take(l.x);
    } else {
      take(l.y);
      take(l.y2);
      if (l.kind == Layer::Kind::kBars) take({0.0});
    }
  }
  if (heatmap_) take(horizontal ? heatmap_->x : heatmap_->y);
  if (!std::isfinite(lo)) return {0.0, 1.0};
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  if (!horizontal && !heatmap_) {
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  return {lo, hi};
}

/// Sequential colour map from dark blue through teal to yellow.
inline std::string colormap(double t) {
  static const double stops[5][3] = {
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0) * 4.0;
  const int i = std::min(3, static_cast<int>(t));
  const double f = t - i;
  char buf[8];
  int rgb[3];
  for (int c = 0; c < 3; ++c)
    rgb[c] = static_cast<int>(std::lround(stops[i][c] + f * (stops[i + 1][c] - stops[i][c])));
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

inline void Panel::render(std::ostream& out, double ox, double oy, double w, double h) const {
  const double left = 58.0;
  const double right = 14.0;
  const double top = 26.0;
  const double bottom = 38.0;
  const double pw = w - left - right;
  const double ph = h - top - bottom;
  const auto [x0, x1] = range(true);
  const auto [y0, y1] = range(false);
  const double px = ox + left;
  const double py = oy + top;
  auto sx = [&](double x) { return px + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return py + ph - (std::clamp(y, y0, y1) - y0) / (y1 - y0) * ph; };
  auto f = [](double v) { return format_fixed(v, 2); };

  out << "<g>\n";
  out << "<text x=\"" << f(ox + w / 2) << "\" y=\"" << f(oy + 17)
      << "\" text-anchor=\"middle\" font-size=\"13\" font-weight=\"bold\">" << escape(title_)
      << "</text>\n";
  out << "<defs><clipPath id=\"c" << f(ox) << "_" << f(oy) << "\"><rect x=\"" << f(px)
      << "\" y=\"" << f(py) << "\" width=\"" << f(pw) << "\" height=\"" << f(ph)
      << "\"/></clipPath></defs>\n";
  out << "<g clip-path=\"url(#c" << f(ox) << "_" << f(oy) << ")\">\n";

  if (heatmap_ && heatmap_->x.size() > 0 && heatmap_->y.size() > 0) {
    const auto& hm = *heatmap_;
    const double vmax = hm.values.size() ? hm.values.maxCoeff() : 1.0;
    const double vmin = hm.values.size() ? std::min(0.0, hm.values.minCoeff()) : 0.0;
    const double cw = hm.x.size() > 1 ? (hm.x.back() - hm.x.front()) / (hm.x.size() - 1) : 1.0;
    const double ch = hm.y.size() > 1 ? (hm.y.back() - hm.y.front()) / (hm.y.size() - 1) : 1.0;
    for (std::size_t c = 0; c < hm.x.size(); ++c) {
      for (std::size_t r = 0; r < hm.y.size(); ++r) {
        const double v = hm.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        const double t = vmax > vmin ? (v - vmin) / (vmax - vmin) : 0.0;
        const double rx = sx(hm.x[c] - cw / 2);
        const double ry = sy(hm.y[r] + ch / 2);
        out << "<rect x=\"" << f(rx) << "\" y=\"" << f(ry) << "\" width=\""
            << f(sx(hm.x[c] + cw / 2) - rx + 0.3) << "\" height=\""
            << f(sy(hm.y[r] - ch / 2) - ry + 0.3) << "\" fill=\"" << colormap(t) << "\"/>\n";
      }
    }
  }

  for (const auto& l : layers_) {
    switch (l.kind) {
      case Layer::Kind::kBand: {
        auto [bx, blo] = decimate(l.x, l.y, 800);
        auto [bx2, bhi] = decimate(l.x, l.y2, 800);
        out << "<path d=\"";
        bool first = true;
        for (std::size_t i = 0; i < bx.size(); ++i) {
          if (!std::isfinite(blo[i])) continue;
          out << (first ? "M" : "L") << f(sx(bx[i])) << "," << f(sy(blo[i])) << " ";
          first = false;
        }
        for (std::size_t i = bx2.size(); i-- > 0;) {
          if (!std::isfinite(bhi[i])) continue;
          out << "L" << f(sx(bx2[i])) << "," << f(sy(bhi[i])) << " ";
        }
        out << "Z\" fill=\"" << l.color << "\" fill-opacity=\"" << f(l.opacity)
            << "\" stroke=\"none\"/>\n";
        break;
      }
      case Layer::Kind::kLine: {
        auto [lx, ly] = decimate(l.x, l.y);
        out << "<path d=\"";
        bool pen = false;
        double prev_y = 0.0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
          if (!std::isfinite(ly[i])) {
            pen = false;
            continue;
          }
          if (pen && l.step) out << "L" << f(sx(lx[i])) << "," << f(sy(prev_y)) << " ";
          out << (pen ? "L" : "M") << f(sx(lx[i])) << "," << f(sy(ly[i])) << " ";
          pen = true;
          prev_y = ly[i];
        }
        out << "\" fill=\"none\" stroke=\"" << l.color << "\" stroke-width=\"" << f(l.width)
            << "\"" << (l.dashed ? " stroke-dasharray=\"5,3\"" : "") << "/>\n";
        break;
      }
      case Layer::Kind::kScatter: {
        const std::size_t n = std::min(l.x.size(), l.y.size());
        const std::size_t stride = n > 4000 ? (n + 3999) / 4000 : 1;
        out << "<g fill=\"" << l.color << "\" fill-opacity=\"" << f(l.opacity) << "\">\n";
        for (std::size_t i = 0; i < n; i += stride) {
          if (!std::isfinite(l.y[i])) continue;
          out << "<circle cx=\"" << f(sx(l.x[i])) << "\" cy=\"" << f(sy(l.y[i])) << "\" r=\""
              << f(l.width) << "\"/>\n";
        }
        out << "</g>\n";
        break;
      }
      case Layer::Kind::kBars: {
        const std::size_t n = std::min(l.x.size(), l.y.size());
        const double bw = n > 1 ? 0.8 * pw / static_cast<double>(n - 1) * (l.x.back() - l.x.front()) /
                                      (x1 - x0)
                                : 4.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double top_y = sy(std::max(l.y[i], 0.0));
          out << "<rect x=\"" << f(sx(l.x[i]) - bw / 2) << "\" y=\"" << f(top_y)
              << "\" width=\"" << f(bw) << "\" height=\"" << f(sy(0.0) - top_y) << "\" fill=\""
              << l.color << "\" fill-opacity=\"" << f(l.opacity) << "\"/>\n";
        }
        break;
      }
    }
  }
  out << "</g>\n";

  // Frame, ticks and labels.
  out << "<rect x=\"" << f(px) << "\" y=\"" << f(py) << "\" width=\"" << f(pw) << "\" height=\""
      << f(ph) << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"0.8\"/>\n";
  auto tick_label = [](const std::vector<double>& ticks, double t) {
    const double step = ticks.size() > 1 ? ticks[1] - ticks[0] : 1.0;
    const int digits = std::clamp(1 - static_cast<int>(std::floor(std::log10(step))), 0, 8);
    return format_fixed(t, digits);
  };
  const auto xticks = nice_ticks(x0, x1);
  const auto yticks = nice_ticks(y0, y1);
  for (double t : xticks) {
    out << "<line x1=\"" << f(sx(t)) << "\" y1=\"" << f(py + ph) << "\" x2=\"" << f(sx(t))
        << "\" y2=\"" << f(py + ph + 4) << "\" stroke=\"#333\"/>\n";
    out << "<text x=\"" << f(sx(t)) << "\" y=\"" << f(py + ph + 15)
        << "\" text-anchor=\"middle\" font-size=\"10\">" << tick_label(xticks, t) << "</text>\n";
  }
  for (double t : yticks) {
    out << "<line x1=\"" << f(px - 4) << "\" y1=\"" << f(sy(t)) << "\" x2=\"" << f(px)
        << "\" y2=\"" << f(sy(t)) << "\" stroke=\"#333\"/>\n";
    out << "<text x=\"" << f(px - 6) << "\" y=\"" << f(sy(t) + 3.5)
        << "\" text-anchor=\"end\" font-size=\"10\">" << tick_label(yticks, t) << "</text>\n";
  }
  out << "<text x=\"" << f(px + pw / 2) << "\" y=\"" << f(oy + h - 6)
      << "\" text-anchor=\"middle\" font-size=\"11\">" << escape(xlabel_) << "</text>\n";
  out << "<text transform=\"translate(" << f(ox + 14) << "," << f(py + ph / 2)
      << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"11\">" << escape(ylabel_)
      << "</text>\n";

  double ly = py + 12;
  for (const auto& l : layers_) {
    if (l.label.empty()) continue;
    out << "<rect x=\"" << f(px + pw - 118) << "\" y=\"" << f(ly - 8) << "\" width=\"12\" height=\"8\" fill=\""
        << l.color << "\"/>\n";
    out << "<text x=\"" << f(px + pw - 102) << "\" y=\"" << f(ly) << "\" font-size=\"10\">"
        << escape(l.label) << "</text>\n";
    ly += 13;
  }
  out << "</g>\n";
}

class Figure {
 public:
  Figure(std::size_t rows, std::size_t cols, double panel_width = 460.0,
         double panel_height = 260.0)
      : rows_(rows), cols_(cols), pw_(panel_width), ph_(panel_height) {}

  Panel& add(Panel p) {
    panels_.push_back(std::move(p));
    return panels_.back();
  }

  std::string render() const {
    std::ostringstream out;
    const double w = pw_ * static_cast<double>(cols_);
    const double h = ph_ * static_cast<double>(rows_);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << format_fixed(w) << "\" height=\""
        << format_fixed(h) << "\" viewBox=\"0 0 " << format_fixed(w) << " " << format_fixed(h)
        << "\" font-family=\"sans-serif\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (std::size_t i = 0; i < panels_.size() && i < rows_ * cols_; ++i) {
      const double ox = pw_ * static_cast<double>(i % cols_);
      const double oy = ph_ * static_cast<double>(i / cols_);
      panels_[i].render(out, ox, oy, pw_, ph_);
    }
    out << "</svg>\n";
    return out.str();
  }

  std::size_t panel_count() const { return panels_.size(); }

 private:
  std::size_t rows_;
  std::size_t cols_;
  double pw_;
  double ph_;
  std::vector<Panel> panels_;
};

}  // namespace ppc::harness::svg
