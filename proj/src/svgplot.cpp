#include "radarfield/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace radarfield::svgplot {

namespace {

constexpr double kW = 640, kH = 420;
constexpr double kMarginL = 64, kMarginR = 16, kMarginT = 36, kMarginB = 48;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Tick step of the form {1, 2, 5} * 10^k closest to span / target.
double nice_step(double span, int target) {
  if (!(span > 0.0)) return 1.0;
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag * (1.0 + 1e-12)) return m * mag;
  }
  return 10.0 * mag;
}

struct Axis {
  double lo = 0.0, hi = 1.0;
  bool log = false;

  double frac(double v) const {
    const double a = log ? std::log10(lo) : lo;
    const double b = log ? std::log10(hi) : hi;
    const double x = log ? std::log10(v) : v;
    return (x - a) / (b - a);
  }
};

std::string rgb(double r, double g, double b) {
  auto c = [](double v) { return static_cast<int>(std::lround(255.0 * std::clamp(v, 0.0, 1.0))); };
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c(r), c(g), c(b));
  return buf;
}

std::string diverging(double u) {  // u in [-1, 1], blue - white - red
  u = std::clamp(u, -1.0, 1.0);
  if (u < 0.0) return rgb(1.0 + u * 0.85, 1.0 + u * 0.60, 1.0 + u * 0.16);
  return rgb(1.0 - u * 0.20, 1.0 - u * 0.75, 1.0 - u * 0.80);
}

std::string sequential(double u) {  // u in [0, 1], dark blue - warm yellow
  u = std::clamp(u, 0.0, 1.0);
  return rgb(0.05 + 0.92 * u, 0.03 + 0.80 * u * u + 0.15 * u, 0.35 + 0.25 * u - 0.45 * u * u);
}

}  // namespace

void line_chart(const std::string& path, const std::string& title,
                const std::string& xlabel, const std::string& ylabel,
                const std::vector<Series>& series, bool log_x) {
  if (series.empty()) throw std::runtime_error("line_chart needs at least one series");
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
  double ylo = xlo, yhi = -xlo;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size() || (!s.band.empty() && s.band.size() != s.y.size()))
      throw std::runtime_error("series size mismatch in " + s.label);
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xlo = std::min(xlo, s.x[i]), xhi = std::max(xhi, s.x[i]);
      const double half = s.band.empty() ? 0.0 : s.band[i];
      ylo = std::min(ylo, s.y[i] - half), yhi = std::max(yhi, s.y[i] + half);
    }
  }
  if (!(xlo < xhi)) xlo -= 0.5, xhi += 0.5;
  if (!(ylo < yhi)) ylo -= 0.5, yhi += 0.5;
  const double ypad = 0.06 * (yhi - ylo);
  ylo -= ypad, yhi += ypad;
  if (log_x && !(xlo > 0.0)) throw std::runtime_error("log x-axis needs positive x");

  Axis ax{xlo, xhi, log_x}, ay{ylo, yhi, false};
  const double pw = kW - kMarginL - kMarginR, ph = kH - kMarginT - kMarginB;
  auto px = [&](double v) { return kMarginL + pw * ax.frac(v); };
  auto py = [&](double v) { return kMarginT + ph * (1.0 - ay.frac(v)); };

  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
    << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kW / 2 << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\""
    << " font-size=\"14\">" << title << "</text>\n";

  // Axes frame and ticks.
  f << "<rect x=\"" << kMarginL << "\" y=\"" << kMarginT << "\" width=\"" << pw << "\" height=\""
    << ph << "\" fill=\"none\" stroke=\"#333\"/>\n";
  if (log_x) {
    for (double dec = std::pow(10.0, std::floor(std::log10(xlo)));
         dec <= xhi * (1.0 + 1e-12); dec *= 10.0) {
      if (dec < xlo / (1.0 + 1e-12)) continue;
      const double x = px(dec);
      f << "<line x1=\"" << x << "\" y1=\"" << kMarginT + ph << "\" x2=\"" << x << "\" y2=\""
        << kMarginT + ph + 5 << "\" stroke=\"#333\"/>\n"
        << "<text x=\"" << x << "\" y=\"" << kMarginT + ph + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(dec)
        << "</text>\n";
    }
  } else {
    const double step = nice_step(xhi - xlo, 6);
    for (double v = std::ceil(xlo / step) * step; v <= xhi + 1e-9 * step; v += step) {
      const double x = px(v);
      f << "<line x1=\"" << x << "\" y1=\"" << kMarginT + ph << "\" x2=\"" << x << "\" y2=\""
        << kMarginT + ph + 5 << "\" stroke=\"#333\"/>\n"
        << "<text x=\"" << x << "\" y=\"" << kMarginT + ph + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(v)
        << "</text>\n";
    }
  }
  const double ystep = nice_step(yhi - ylo, 6);
  for (double v = std::ceil(ylo / ystep) * ystep; v <= yhi + 1e-9 * ystep; v += ystep) {
    const double y = py(v);
    f << "<line x1=\"" << kMarginL - 5 << "\" y1=\"" << y << "\" x2=\"" << kMarginL << "\" y2=\""
      << y << "\" stroke=\"#333\"/>\n"
      << "<line x1=\"" << kMarginL << "\" y1=\"" << y << "\" x2=\"" << kMarginL + pw
      << "\" y2=\"" << y << "\" stroke=\"#eee\"/>\n"
      << "<text x=\"" << kMarginL - 8 << "\" y=\"" << y + 4
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(v)
      << "</text>\n";
  }
  f << "<text x=\"" << kMarginL + pw / 2 << "\" y=\"" << kH - 10
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << xlabel
    << "</text>\n"
    << "<text x=\"16\" y=\"" << kMarginT + ph / 2
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\""
    << " transform=\"rotate(-90 16 " << kMarginT + ph / 2 << ")\">" << ylabel << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const std::string color = s.color.empty() ? kPalette[si % 8] : s.color;
    if (!s.band.empty() && s.x.size() > 1) {
      f << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        f << px(s.x[i]) << "," << py(s.y[i] + s.band[i]) << " ";
      for (std::size_t i = s.x.size(); i-- > 0;)
        f << px(s.x[i]) << "," << py(s.y[i] - s.band[i]) << " ";
      f << "\"/>\n";
    }
    f << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) f << px(s.x[i]) << "," << py(s.y[i]) << " ";
    f << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      f << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i])
        << "\" r=\"2.4\" fill=\"" << color << "\"/>\n";
    const double ly = kMarginT + 14 + 16 * static_cast<double>(si);
    f << "<line x1=\"" << kMarginL + pw - 110 << "\" y1=\"" << ly << "\" x2=\""
      << kMarginL + pw - 90 << "\" y2=\"" << ly << "\" stroke=\"" << color
      << "\" stroke-width=\"2\"/>\n"
      << "<text x=\"" << kMarginL + pw - 84 << "\" y=\"" << ly + 4
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label << "</text>\n";
  }
  f << "</svg>\n";
}

void heatmap(const std::string& path, const std::string& title,
             const std::vector<double>& values, int K, int L, bool center_zero) {
  if (K < 1 || L < 1 || values.size() != static_cast<std::size_t>(K) * static_cast<std::size_t>(L))
    throw std::runtime_error("heatmap size mismatch");
  double lo = values[0], hi = values[0];
  for (double v : values) lo = std::min(lo, v), hi = std::max(hi, v);
  const double cell = std::min(480.0 / K, 480.0 / L);
  const double w = K * cell + 32, h = L * cell + 56;
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
    << "\" viewBox=\"0 0 " << w << " " << h << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\""
    << " font-size=\"13\">" << title << " [" << fmt(lo) << ", " << fmt(hi) << "]</text>\n";
  const double amax = std::max(std::abs(lo), std::abs(hi));
  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < L; ++l) {
      const double v = values[static_cast<std::size_t>(k) * L + l];
      std::string color;
      if (center_zero) {
        color = diverging(amax > 0.0 ? v / amax : 0.0);
      } else {
        color = sequential(hi > lo ? (v - lo) / (hi - lo) : 0.5);
      }
      // l indexes y; flip so larger y draws higher on the canvas.
      const double x = 16 + k * cell, y = 32 + (L - 1 - l) * cell;
      f << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell + 0.5
        << "\" height=\"" << cell + 0.5 << "\" fill=\"" << color << "\"/>\n";
    }
  }
  f << "</svg>\n";
}

}  // namespace radarfield::svgplot
