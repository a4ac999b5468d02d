#pragma once

#include <string>
#include <vector>

namespace sono::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 720;
  int height = 320;
};

// Standalone SVG document with axes, min/max tick labels and one polyline per
// series. Throws LengthMismatch when a series has unequal x and y.
std::string line_chart(const std::vector<Series>& series, const ChartOptions& options);

}  // namespace sono::svg
