#pragma once

#include <span>
#include <string>
#include <vector>

namespace sdelab {

// Doubles print with %.17g so CSVs round-trip exactly and reruns are
// byte-comparable.
std::string format_double(double v);

struct CsvColumn {
  std::string name;
  std::vector<double> values;
};

void write_csv(const std::string& path, std::span<const CsvColumn> columns);

// Minimal SVG line chart (one polyline per series, log axes optional).
struct SvgSeries {
  std::string name;
  std::vector<double> xs;
  std::vector<double> ys;
};

void write_svg_chart(const std::string& path, const std::string& title,
                     std::span<const SvgSeries> series, bool log_x,
                     bool log_y);

}  // namespace sdelab
