#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "sdjscc/evaluate.hpp"

namespace sdjscc {

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;  // sorted by x
};

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

// Static SVG line chart. Non-finite points are skipped.
std::string render_svg(const LinePlot& plot);
void write_svg(const std::filesystem::path& path, const LinePlot& plot);

// Seed-averaged ACC against the given record field, one series per method
// (and tau, when sd_jscc rows carry several).
enum class Axis { snr_test, bpp, tau };
LinePlot accuracy_plot(const std::vector<ExperimentRecord>& records, Axis x);

}  // namespace sdjscc
