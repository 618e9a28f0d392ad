#pragma once

#include <string>
#include <vector>

namespace radarfield::svgplot {

// One polyline, with an optional symmetric shaded band of half-width band[i]
// around each point.
struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> band;  // empty, or same length as y
  std::string color;         // empty picks from the default palette
};

// Writes a self-contained SVG line chart with axes, ticks, and a legend.
void line_chart(const std::string& path, const std::string& title,
                const std::string& xlabel, const std::string& ylabel,
                const std::vector<Series>& series, bool log_x = false);

// K x L field as a colored cell grid, row-major with k the x index.
// center_zero uses a blue-white-red map symmetric about 0, otherwise a
// sequential dark-to-warm map over the value range.
void heatmap(const std::string& path, const std::string& title,
             const std::vector<double>& values, int K, int L, bool center_zero);

}  // namespace radarfield::svgplot
