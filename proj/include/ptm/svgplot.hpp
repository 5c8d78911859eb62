#pragma once

#include <string>
#include <vector>

#include "ptm/errors.hpp"

namespace ptm {

struct MissingInput : Error {
    explicit MissingInput(const std::string& what)
        : Error(ErrorCategory::input, "MISSING_INPUT", what) {}
};

struct SeriesPoint {
    double x = 0;
    double y = 0;
};

struct CurveSeries {
    std::string label;
    std::vector<SeriesPoint> points;
};

// Line chart with shared axes, one polyline per series, legend when more
// than one series is present. Returns a standalone SVG document.
std::string render_curve_svg(const std::vector<CurveSeries>& series, const std::string& title,
                             const std::string& x_label, const std::string& y_label);

// Two side-by-side bars per group (e.g. struggling vs non-struggling).
struct BarGroup {
    std::string label;
    double a = 0;
    double b = 0;
};

std::string render_grouped_bars_svg(const std::vector<BarGroup>& groups, const std::string& title,
                                    const std::string& series_a, const std::string& series_b,
                                    const std::string& y_label);

}  // namespace ptm
