#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"

namespace markovgen {

// Minimal SVG line plots: polylines, axes with value ticks, a title. Enough
// to eyeball error curves and sampled series without external tooling.
class SvgPlot {
 public:
  SvgPlot(std::string title, std::string xlabel, std::string ylabel)
      : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

  void set_log_y(bool on) { log_y_ = on; }

  void add_series(std::vector<double> x, std::vector<double> y, std::string color = "") {
    if (x.size() != y.size() || x.empty()) {
      throw std::invalid_argument("SvgPlot: series needs matching non-empty x/y");
    }
    if (color.empty()) {
      static const char* cycle[] = {"#4682b4", "#dc143c", "#2e8b57", "#ff8c00", "#800080"};
      color = cycle[series_.size() % 5];
    }
    series_.push_back(Series{std::move(x), std::move(y), std::move(color)});
  }

  void write(const std::string& path) const {
    if (series_.empty()) throw std::invalid_argument("SvgPlot: nothing to draw");
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const Series& s : series_) {
      for (double v : s.x) {
        xmin = std::min(xmin, v);
        xmax = std::max(xmax, v);
      }
      for (double v : s.y) {
        const double t = ty(v);
        ymin = std::min(ymin, t);
        ymax = std::max(ymax, t);
      }
    }
    if (!(xmax > xmin)) xmax = xmin + 1.0;
    if (!(ymax > ymin)) ymax = ymin + 1.0;

    const double pw = kW - kL - kR, ph = kH - kT - kB;
    const auto px = [&](double v) { return kL + (v - xmin) / (xmax - xmin) * pw; };
    const auto py = [&](double v) { return kH - kB - (ty(v) - ymin) / (ymax - ymin) * ph; };

    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
      << title_ << "</text>\n";
    f << "<rect x=\"" << kL << "\" y=\"" << kT << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int i = 0; i <= kTicks; ++i) {
      const double fx = xmin + (xmax - xmin) * i / kTicks;
      const double fy = ymin + (ymax - ymin) * i / kTicks;
      f << "<line x1=\"" << px(fx) << "\" y1=\"" << kH - kB << "\" x2=\"" << px(fx) << "\" y2=\""
        << kH - kB + 5 << "\" stroke=\"#444\"/>\n"
        << "<text x=\"" << px(fx) << "\" y=\"" << kH - kB + 20
        << "\" text-anchor=\"middle\" font-size=\"11\">" << label(fx) << "</text>\n";
      const double ypix = kH - kB - ph * i / kTicks;
      f << "<line x1=\"" << kL - 5 << "\" y1=\"" << ypix << "\" x2=\"" << kL << "\" y2=\"" << ypix
        << "\" stroke=\"#444\"/>\n"
        << "<text x=\"" << kL - 8 << "\" y=\"" << ypix + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << label(inv_ty(fy)) << "</text>\n";
    }
    f << "<text x=\"" << kL + pw / 2 << "\" y=\"" << kH - 8
      << "\" text-anchor=\"middle\" font-size=\"13\">" << xlabel_ << "</text>\n"
      << "<text x=\"16\" y=\"" << kT + ph / 2 << "\" text-anchor=\"middle\" font-size=\"13\" "
      << "transform=\"rotate(-90 16 " << kT + ph / 2 << ")\">" << ylabel_ << "</text>\n";
    for (const Series& s : series_) {
      f << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
      for (size_t i = 0; i < s.x.size(); ++i) {
        f << px(s.x[i]) << "," << py(s.y[i]) << (i + 1 < s.x.size() ? " " : "");
      }
      f << "\"/>\n";
    }
    f << "</svg>\n";
  }

 private:
  struct Series {
    std::vector<double> x, y;
    std::string color;
  };

  static constexpr int kW = 900, kH = 540, kL = 80, kR = 30, kT = 40, kB = 50, kTicks = 5;

  double ty(double v) const {
    if (!log_y_) return v;
    if (!(v > 0.0)) throw std::invalid_argument("SvgPlot: log scale needs positive y");
    return std::log10(v);
  }
  double inv_ty(double v) const { return log_y_ ? std::pow(10.0, v) : v; }

  static std::string label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
  }

  std::string title_, xlabel_, ylabel_;
  bool log_y_ = false;
  std::vector<Series> series_;
};

}  // namespace markovgen
