#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace dloss {

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

struct ChartOptions {
    std::string title;
    std::string x_label = "epoch";
    std::string y_label = "MSE";
    bool log_y = false;
    int width = 720;
    int height = 440;
};

/// Minimal line chart: one polyline per series, axes with min/max ticks and a
/// legend. Output is a pure function of the inputs.
void write_svg_chart(const std::vector<Series>& series, const ChartOptions& options, std::ostream& out);

}  // namespace dloss
