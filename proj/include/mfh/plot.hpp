#pragma once

// Standalone SVG line plots of CSV curves.

#include <filesystem>
#include <string>

namespace mfh {

struct PlotStyle {
  std::size_t x_col = 0;
  std::size_t y_col = 1;
  bool log_x = false;  ///< log2 axis, ticks labelled 2^k
  bool log_y = false;
  bool fit = false;    ///< least-squares line in the plotted coordinates
  std::string title;
};

/// Only the two selected columns must be numeric; other columns may hold
/// text. MalformedCsv names the offending row (1-based, header = row 1).
std::string render_svg(const std::string& csv_text, const PlotStyle& style);

void emit_plot(const std::filesystem::path& csv, const PlotStyle& style, const std::filesystem::path& svg);

}  // namespace mfh
