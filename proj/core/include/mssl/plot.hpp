#pragma once

#include <string>
#include <vector>

namespace mssl {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> y_low;   // optional error bars
  std::vector<double> y_high;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  double y_min = 0.0;
  double y_max = 1.0;
};

/// Self-contained SVG line chart.
std::string line_plot_svg(const PlotSpec& spec);

}  // namespace mssl
