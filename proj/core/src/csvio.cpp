#include "sdelab/csvio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace sdelab {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, std::span<const CsvColumn> columns) {
  if (columns.empty()) throw std::invalid_argument("write_csv: no columns");
  const std::size_t rows = columns.front().values.size();
  for (const auto& c : columns)
    if (c.values.size() != rows)
      throw std::invalid_argument("write_csv: ragged columns");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path);
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c) out << ',';
    out << columns[c].name;
  }
  out << '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) out << ',';
      out << format_double(columns[c].values[r]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write_csv: write failed: " + path);
}

namespace {

double axis_value(double v, bool log_scale) {
  return log_scale ? std::log10(v) : v;
}

}  // namespace

void write_svg_chart(const std::string& path, const std::string& title,
                     std::span<const SvgSeries> series, bool log_x,
                     bool log_y) {
  constexpr int kW = 640, kH = 440;
  constexpr int kL = 60, kR = 20, kT = 36, kB = 44;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      if (log_x && !(s.xs[i] > 0.0)) continue;
      if (log_y && !(s.ys[i] > 0.0)) continue;
      const double x = axis_value(s.xs[i], log_x);
      const double y = axis_value(s.ys[i], log_y);
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (!(xmax > xmin)) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (!(ymax > ymin)) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  auto px = [&](double x) {
    return kL + (axis_value(x, log_x) - xmin) / (xmax - xmin) * (kW - kL - kR);
  };
  auto py = [&](double y) {
    return kH - kB -
           (axis_value(y, log_y) - ymin) / (ymax - ymin) * (kH - kT - kB);
  };

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                  "#9467bd", "#ff7f0e", "#8c564b"};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_svg_chart: cannot open " + path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kW
      << "' height='" << kH << "'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << kW / 2 << "' y='20' text-anchor='middle' "
      << "font-family='sans-serif' font-size='14'>" << title << "</text>\n";
  out << "<line x1='" << kL << "' y1='" << kH - kB << "' x2='" << kW - kR
      << "' y2='" << kH - kB << "' stroke='black'/>\n";
  out << "<line x1='" << kL << "' y1='" << kT << "' x2='" << kL << "' y2='"
      << kH - kB << "' stroke='black'/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 4.0;
    const double fy = ymin + (ymax - ymin) * i / 4.0;
    const double gx = kL + (kW - kL - kR) * i / 4.0;
    const double gy = kH - kB - (kH - kT - kB) * i / 4.0;
    char lab[40];
    std::snprintf(lab, sizeof lab, "%.3g", log_x ? std::pow(10.0, fx) : fx);
    out << "<text x='" << gx << "' y='" << kH - kB + 18
        << "' text-anchor='middle' font-family='sans-serif' font-size='11'>"
        << lab << "</text>\n";
    std::snprintf(lab, sizeof lab, "%.3g", log_y ? std::pow(10.0, fy) : fy);
    out << "<text x='" << kL - 6 << "' y='" << gy + 4
        << "' text-anchor='end' font-family='sans-serif' font-size='11'>"
        << lab << "</text>\n";
  }
  std::size_t color = 0;
  for (const auto& s : series) {
    out << "<polyline fill='none' stroke='"
        << kColors[color % (sizeof kColors / sizeof *kColors)]
        << "' stroke-width='1.5' points='";
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      if (log_x && !(s.xs[i] > 0.0)) continue;
      if (log_y && !(s.ys[i] > 0.0)) continue;
      out << px(s.xs[i]) << ',' << py(s.ys[i]) << ' ';
    }
    out << "'/>\n";
    out << "<text x='" << kW - kR - 8 << "' y='" << kT + 16 * (color + 1)
        << "' text-anchor='end' font-family='sans-serif' font-size='12' fill='"
        << kColors[color % (sizeof kColors / sizeof *kColors)] << "'>" << s.name
        << "</text>\n";
    ++color;
  }
  out << "</svg>\n";
  if (!out) throw std::runtime_error("write_svg_chart: write failed: " + path);
}

}  // namespace sdelab
