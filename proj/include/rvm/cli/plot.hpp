#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace rvm::cli {

struct Series {
  std::string label;
  std::vector<double> x, y;
};

struct PlotSpec {
  std::string title, x_label, y_label;
  std::vector<Series> series;
  bool diagonal = false;  // draw the y = x reference line
};

void write_svg_line_plot(const std::filesystem::path& path, const PlotSpec& spec);

// Render a CSV emitted by this toolkit (loss curve, calibration curve or a
// generic first-column-is-x table) as an SVG line plot.
void plot_csv(const std::filesystem::path& csv_path, const std::filesystem::path& svg_path);

}  // namespace rvm::cli
