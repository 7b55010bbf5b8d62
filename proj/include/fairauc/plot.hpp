#pragma once

#include "fairauc/experiment.hpp"

#include <string>
#include <vector>

namespace fairauc {

struct PlotOptions {
    std::string title{ "Pareto frontier" };
    std::string x_label{ "fairness gap (test)" };
    std::string y_label{ "AUC (test)" };
    double width{ 640.0 };
    double height{ 480.0 };
};

/// Axis range [lo, hi] of the plotted data, padded by 5% of the span on each side.
struct AxisRange {
    double lo;
    double hi;
};

[[nodiscard]] AxisRange padded_range(double lo, double hi);

/// Static SVG scatter of AUC against gap, one circle per point, one colour per method, with
/// error bars where the standard error is positive.
[[nodiscard]] std::string emit_plot(const std::vector<FrontierPoint> &points, const PlotOptions &opts = {});

}  // namespace fairauc
