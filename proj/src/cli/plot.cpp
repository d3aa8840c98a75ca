#include "rvm/cli/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "rvm/core/errors.hpp"
#include "rvm/core/io.hpp"

namespace rvm::cli {

namespace {

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open csv: " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  if (rows.size() < 2) throw ConfigError("csv has no data rows: " + path.string());
  return rows;
}

}  // namespace

void write_svg_line_plot(const std::filesystem::path& path, const PlotSpec& spec) {
  const double width = 860, height = 520;
  const double ml = 70, mr = 190, mt = 46, mb = 56;
  const double pw = width - ml - mr, ph = height - mt - mb;

  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  bool first = true;
  for (const Series& s : spec.series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (first) {
        x_min = x_max = s.x[i];
        y_min = y_max = s.y[i];
        first = false;
      }
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      y_min = std::min(y_min, s.y[i]);
      y_max = std::max(y_max, s.y[i]);
    }
  }
  if (spec.diagonal) {
    x_min = std::min(x_min, 0.0);
    y_min = std::min(y_min, 0.0);
    x_max = std::max(x_max, 1.0);
    y_max = std::max(y_max, 1.0);
  }
  if (x_max == x_min) x_max = x_min + 1;
  if (y_max == y_min) y_max = y_min + 1;
  auto sx = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * pw; };
  auto sy = [&](double y) { return mt + ph - (y - y_min) / (y_max - y_min) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
      << spec.title << "</text>\n";

  // axes + ticks
  svg << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double fx = x_min + (x_max - x_min) * i / 5.0;
    const double fy = y_min + (y_max - y_min) * i / 5.0;
    svg << "<line x1=\"" << sx(fx) << "\" y1=\"" << mt + ph << "\" x2=\"" << sx(fx) << "\" y2=\""
        << mt + ph + 5 << "\" stroke=\"#333\"/>\n";
    svg << "<text x=\"" << sx(fx) << "\" y=\"" << mt + ph + 20
        << "\" text-anchor=\"middle\" font-size=\"11\">" << std::setprecision(4) << fx << "</text>\n";
    svg << "<line x1=\"" << ml - 5 << "\" y1=\"" << sy(fy) << "\" x2=\"" << ml << "\" y2=\"" << sy(fy)
        << "\" stroke=\"#333\"/>\n";
    svg << "<text x=\"" << ml - 8 << "\" y=\"" << sy(fy) + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << std::setprecision(4) << fy << "</text>\n";
  }
  svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 14
      << "\" text-anchor=\"middle\" font-size=\"13\">" << spec.x_label << "</text>\n";
  svg << "<text x=\"18\" y=\"" << mt + ph / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 " << mt + ph / 2
      << ")\">" << spec.y_label << "</text>\n";

  if (spec.diagonal) {
    svg << "<line x1=\"" << sx(std::max(x_min, y_min)) << "\" y1=\"" << sy(std::max(x_min, y_min))
        << "\" x2=\"" << sx(std::min(x_max, y_max)) << "\" y2=\"" << sy(std::min(x_max, y_max))
        << "\" stroke=\"#888\" stroke-dasharray=\"6 4\"/>\n";
  }

  int color = 0;
  double legend_y = mt + 10;
  for (const Series& s : spec.series) {
    const char* stroke = kPalette[color % 10];
    svg << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.6\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      svg << sx(s.x[i]) << "," << sy(s.y[i]) << " ";
    }
    svg << "\"/>\n";
    svg << "<line x1=\"" << ml + pw + 12 << "\" y1=\"" << legend_y << "\" x2=\"" << ml + pw + 34
        << "\" y2=\"" << legend_y << "\" stroke=\"" << stroke << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << ml + pw + 40 << "\" y=\"" << legend_y + 4 << "\" font-size=\"11\">"
        << s.label << "</text>\n";
    legend_y += 18;
    ++color;
  }
  svg << "</svg>\n";
  write_text_file(path, svg.str());
}

void plot_csv(const std::filesystem::path& csv_path, const std::filesystem::path& svg_path) {
  const auto rows = read_csv(csv_path);
  const auto& header = rows.front();
  PlotSpec spec;

  if (header.size() >= 4 && header[0] == "t_seconds" && header[1] == "dimension") {
    // calibration: t_seconds,dimension,expected,observed
    std::map<std::string, Series> by_key;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const std::string key = "t=" + rows[r][0] + "s " + rows[r][1];
      Series& s = by_key[key];
      s.label = key;
      s.x.push_back(std::stod(rows[r][2]));
      s.y.push_back(std::stod(rows[r][3]));
    }
    for (auto& [key, s] : by_key) spec.series.push_back(std::move(s));
    spec.title = "Calibration";
    spec.x_label = "expected CDF";
    spec.y_label = "observed CDF";
    spec.diagonal = true;
  } else {
    // generic: first column is x, every numeric column after it a series
    for (std::size_t c = 1; c < header.size(); ++c) {
      Series s;
      s.label = header[c];
      for (std::size_t r = 1; r < rows.size(); ++r) {
        try {
          const double x = std::stod(rows[r][0]);
          const double y = std::stod(rows[r][c]);
          s.x.push_back(x);
          s.y.push_back(y);
        } catch (const std::exception&) {
          // skip non-numeric cells
        }
      }
      if (!s.x.empty()) spec.series.push_back(std::move(s));
    }
    spec.title = csv_path.filename().string();
    spec.x_label = header[0];
    spec.y_label = "value";
  }
  if (spec.series.empty()) throw ConfigError("no plottable series in " + csv_path.string());
  write_svg_line_plot(svg_path, spec);
}

}  // namespace rvm::cli
