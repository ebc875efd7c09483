#pragma once

#include <string>
#include <vector>

namespace fisheyex::pipeline {

struct Series {
  std::string name;
  std::vector<double> values;
};

/// Standalone SVG line chart, x = iteration (1-based), y = value on a log10 axis
/// when every value is positive, linear otherwise.
std::string svg_line_chart(const std::string& title, const std::vector<Series>& series);

}  // namespace fisheyex::pipeline
