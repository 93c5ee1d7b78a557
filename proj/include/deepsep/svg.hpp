#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace deepsep {

struct LineSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Minimal standalone SVG renderings for inspecting outputs without a
/// plotting stack.
void write_line_plot_svg(const std::filesystem::path& path, const std::vector<LineSeries>& series,
                         const std::string& title, const std::string& x_label, const std::string& y_label);

/// rows[0] is drawn at the bottom; colour scale is linear between the matrix
/// min and max (log10(1 + v) when `log_scale`).
void write_heatmap_svg(const std::filesystem::path& path, const std::vector<std::vector<double>>& rows,
                       const std::string& title, bool log_scale = true);

}  // namespace deepsep
