#include "deepsep/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>

#include "deepsep/errors.hpp"

namespace deepsep {

namespace {

constexpr double kWidth = 720, kHeight = 420, kMargin = 56;
constexpr std::array<const char*, 6> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::ofstream open_svg(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError(FormatErrorKind::Io, "cannot open " + path.string() + " for writing");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    return out;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

void write_line_plot_svg(const std::filesystem::path& path, const std::vector<LineSeries>& series,
                         const std::string& title, const std::string& x_label, const std::string& y_label) {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    const double pw = kWidth - 2 * kMargin, ph = kHeight - 2 * kMargin;
    auto px = [&](double x) { return kMargin + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return kHeight - kMargin - (y - y0) / (y1 - y0) * ph; };

    auto out = open_svg(path);
    out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\">" << escape(title) << "</text>\n";
    out << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"#888\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">" << escape(x_label)
        << "</text>\n";
    out << "<text x=\"14\" y=\"" << kHeight / 2 << "\" transform=\"rotate(-90 14 " << kHeight / 2
        << ")\" text-anchor=\"middle\">" << escape(y_label) << "</text>\n";
    out << "<text x=\"" << kMargin << "\" y=\"" << kHeight - kMargin + 16 << "\">" << x0 << "</text>\n";
    out << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kHeight - kMargin + 16 << "\" text-anchor=\"end\">" << x1
        << "</text>\n";
    out << "<text x=\"" << kMargin - 4 << "\" y=\"" << kHeight - kMargin << "\" text-anchor=\"end\">" << y0
        << "</text>\n";
    out << "<text x=\"" << kMargin - 4 << "\" y=\"" << kMargin + 10 << "\" text-anchor=\"end\">" << y1 << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* colour = kPalette[k % kPalette.size()];
        out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) out << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
        }
        out << "\"/>\n";
        out << "<text x=\"" << kWidth - kMargin - 4 << "\" y=\"" << kMargin + 16 + 14 * static_cast<double>(k)
            << "\" text-anchor=\"end\" fill=\"" << colour << "\">" << escape(s.label) << "</text>\n";
    }
    out << "</svg>\n";
}

void write_heatmap_svg(const std::filesystem::path& path, const std::vector<std::vector<double>>& rows,
                       const std::string& title, bool log_scale) {
    auto out = open_svg(path);
    out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\">" << escape(title) << "</text>\n";
    if (rows.empty() || rows.front().empty()) {
        out << "</svg>\n";
        return;
    }
    auto value = [&](double v) { return log_scale ? std::log10(1.0 + std::max(v, 0.0)) : v; };
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& r : rows) {
        for (double v : r) {
            lo = std::min(lo, value(v));
            hi = std::max(hi, value(v));
        }
    }
    if (hi == lo) hi = lo + 1;
    const double pw = kWidth - 2 * kMargin, ph = kHeight - 2 * kMargin;
    const double cw = pw / static_cast<double>(rows.front().size()), ch = ph / static_cast<double>(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            const double t = (value(rows[r][c]) - lo) / (hi - lo);
            const int red = static_cast<int>(255 * std::clamp(1.5 * t, 0.0, 1.0));
            const int green = static_cast<int>(255 * std::clamp(1.5 * t - 0.5, 0.0, 1.0));
            const int blue = static_cast<int>(255 * std::clamp(0.4 + t - 1.5 * t * t, 0.0, 1.0));
            out << "<rect x=\"" << kMargin + cw * static_cast<double>(c) << "\" y=\""
                << kHeight - kMargin - ch * static_cast<double>(r + 1) << "\" width=\"" << cw + 0.5 << "\" height=\""
                << ch + 0.5 << "\" fill=\"rgb(" << red << ',' << green << ',' << blue << ")\"/>\n";
        }
    }
    out << "</svg>\n";
}

}  // namespace deepsep
