#pragma once

#include <string>
#include <vector>

#include "nesp/matrix.hpp"

namespace nesp {

struct SvgOptions {
    int width = 820;
    int height = 820;
    double margin = 50.0;
    double mark_radius = 1.6;
    std::size_t max_marks = 50000; // scatter subsamples beyond this
};

// Scatter plot of a layout; labels (when given, one per point) pick mark
// colors from a cycling palette.
void svg_scatter(const std::string& path, const Embedding& e,
                 const std::vector<int>& labels = {}, const SvgOptions& opt = {});

struct SvgSeries {
    std::string name;
    std::vector<double> x, y;
};

// Line chart of one or more series on shared axes; log axes take base-10
// transforms and require positive values.
void svg_curves(const std::string& path, const std::vector<SvgSeries>& series, bool log_x,
                bool log_y, const SvgOptions& opt = {});

} // namespace nesp
