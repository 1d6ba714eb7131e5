#include "dloss/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace dloss {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string escape(const std::string& s) {
    std::string out;
    for (const char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

}  // namespace

void write_svg_chart(const std::vector<Series>& series, const ChartOptions& options, std::ostream& out) {
    if (series.empty()) {
        throw std::invalid_argument("write_svg_chart: no series");
    }
    auto ty = [&](double y) { return options.log_y ? std::log10(y) : y; };
    double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
    double y_min = x_min, y_max = -x_min;
    for (const auto& s : series) {
        for (const auto& [x, y] : s.points) {
            if (options.log_y && !(y > 0.0)) {
                continue;
            }
            x_min = std::min(x_min, x);
            x_max = std::max(x_max, x);
            y_min = std::min(y_min, ty(y));
            y_max = std::max(y_max, ty(y));
        }
    }
    if (!std::isfinite(x_min)) {
        x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
    }
    if (x_max == x_min) x_max = x_min + 1.0;
    if (y_max == y_min) y_max = y_min + 1.0;

    const double left = 70, right = 170, top = 40, bottom = 50;
    const double pw = options.width - left - right;
    const double ph = options.height - top - bottom;
    auto px = [&](double x) { return left + (x - x_min) / (x_max - x_min) * pw; };
    auto py = [&](double y) { return top + (1.0 - (ty(y) - y_min) / (y_max - y_min)) * ph; };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << options.width << "\" height=\"" << options.height
        << "\" viewBox=\"0 0 " << options.width << ' ' << options.height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!options.title.empty()) {
        out << "<text x=\"" << num(left + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
            << escape(options.title) << "</text>\n";
    }
    out << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\""
        << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
    const std::string y_lo = options.log_y ? tick(std::pow(10.0, y_min)) : tick(y_min);
    const std::string y_hi = options.log_y ? tick(std::pow(10.0, y_max)) : tick(y_max);
    out << "<text x=\"" << num(left - 6) << "\" y=\"" << num(top + ph) << "\" text-anchor=\"end\" font-size=\"11\">"
        << y_lo << "</text>\n";
    out << "<text x=\"" << num(left - 6) << "\" y=\"" << num(top + 10) << "\" text-anchor=\"end\" font-size=\"11\">"
        << y_hi << "</text>\n";
    out << "<text x=\"" << num(left) << "\" y=\"" << num(top + ph + 16) << "\" font-size=\"11\">" << tick(x_min)
        << "</text>\n";
    out << "<text x=\"" << num(left + pw) << "\" y=\"" << num(top + ph + 16)
        << "\" text-anchor=\"end\" font-size=\"11\">" << tick(x_max) << "</text>\n";
    out << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(top + ph + 36)
        << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(options.x_label) << "</text>\n";
    out << "<text x=\"16\" y=\"" << num(top + ph / 2) << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
        << num(top + ph / 2) << ")\">" << escape(options.y_label) << (options.log_y ? " (log)" : "") << "</text>\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* color = kPalette[i % std::size(kPalette)];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        bool first = true;
        for (const auto& [x, y] : series[i].points) {
            if (options.log_y && !(y > 0.0)) {
                continue;
            }
            out << (first ? "" : " ") << num(px(x)) << ',' << num(py(y));
            first = false;
        }
        out << "\"/>\n";
        const double ly = top + 14.0 + 16.0 * static_cast<double>(i);
        out << "<line x1=\"" << num(left + pw + 12) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(left + pw + 32)
            << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << num(left + pw + 38) << "\" y=\"" << num(ly) << "\" font-size=\"11\">"
            << escape(series[i].name) << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace dloss
