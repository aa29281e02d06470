#pragma once

#include <string>
#include <vector>

namespace siftbench {

struct Series {
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartLabels {
  std::string title;
  std::string x_axis;
  std::string y_axis;
};

/// Minimal standalone SVG line chart with a linear frame and tick labels.
std::string render_line_chart(const Series& series, const ChartLabels& labels,
                              double x_min, double x_max);

}  // namespace siftbench
