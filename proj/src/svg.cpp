#include "nesp/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "nesp/common.hpp"

namespace nesp {
namespace {

const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                          "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

struct Frame {
    double lo_x, hi_x, lo_y, hi_y;
    double px0, px1, py0, py1; // pixel box; py0 is the bottom

    double sx(double x) const {
        const double t = hi_x > lo_x ? (x - lo_x) / (hi_x - lo_x) : 0.5;
        return px0 + t * (px1 - px0);
    }
    double sy(double y) const {
        const double t = hi_y > lo_y ? (y - lo_y) / (hi_y - lo_y) : 0.5;
        return py0 - t * (py0 - py1);
    }
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

void open_svg(std::ofstream& f, const SvgOptions& opt) {
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\""
      << opt.height << "\" viewBox=\"0 0 " << opt.width << ' ' << opt.height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

void draw_frame(std::ofstream& f, const Frame& fr, const char* x_lo, const char* x_hi,
                const char* y_lo, const char* y_hi) {
    f << "<rect x=\"" << fr.px0 << "\" y=\"" << fr.py1 << "\" width=\"" << fr.px1 - fr.px0
      << "\" height=\"" << fr.py0 - fr.py1
      << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
    f << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#444\">\n";
    f << "<text x=\"" << fr.px0 << "\" y=\"" << fr.py0 + 16 << "\">" << x_lo << "</text>\n";
    f << "<text x=\"" << fr.px1 << "\" y=\"" << fr.py0 + 16 << "\" text-anchor=\"end\">" << x_hi
      << "</text>\n";
    f << "<text x=\"" << fr.px0 - 4 << "\" y=\"" << fr.py0 << "\" text-anchor=\"end\">" << y_lo
      << "</text>\n";
    f << "<text x=\"" << fr.px0 - 4 << "\" y=\"" << fr.py1 + 10 << "\" text-anchor=\"end\">"
      << y_hi << "</text>\n";
    f << "</g>\n";
}

} // namespace

void svg_scatter(const std::string& path, const Embedding& e, const std::vector<int>& labels,
                 const SvgOptions& opt) {
    if (e.n == 0) throw UsageError("svg_scatter: empty layout");
    if (!labels.empty() && labels.size() != e.n)
        throw UsageError("svg_scatter: one label per point required");
    std::ofstream f(path);
    if (!f) throw DataError(path + ": cannot open for writing");

    Frame fr;
    fr.lo_x = fr.hi_x = e.x(0);
    fr.lo_y = fr.hi_y = e.y(0);
    for (std::size_t i = 1; i < e.n; ++i) {
        fr.lo_x = std::min(fr.lo_x, e.x(i));
        fr.hi_x = std::max(fr.hi_x, e.x(i));
        fr.lo_y = std::min(fr.lo_y, e.y(i));
        fr.hi_y = std::max(fr.hi_y, e.y(i));
    }
    fr.px0 = opt.margin;
    fr.px1 = opt.width - opt.margin;
    fr.py0 = opt.height - opt.margin;
    fr.py1 = opt.margin;

    const std::size_t stride = e.n > opt.max_marks ? (e.n + opt.max_marks - 1) / opt.max_marks : 1;

    open_svg(f, opt);
    draw_frame(f, fr, num(fr.lo_x).c_str(), num(fr.hi_x).c_str(), num(fr.lo_y).c_str(),
               num(fr.hi_y).c_str());
    f << "<g stroke=\"none\" fill-opacity=\"0.65\">\n";
    for (std::size_t i = 0; i < e.n; i += stride) {
        const char* color =
            labels.empty() ? kPalette[0]
                           : kPalette[static_cast<std::size_t>(
                                 labels[i] < 0 ? 0 : labels[i] % static_cast<int>(kPaletteSize))];
        f << "<circle cx=\"" << num(fr.sx(e.x(i))) << "\" cy=\"" << num(fr.sy(e.y(i)))
          << "\" r=\"" << opt.mark_radius << "\" fill=\"" << color << "\"/>\n";
    }
    f << "</g>\n</svg>\n";
    if (!f) throw DataError(path + ": write failed");
}

void svg_curves(const std::string& path, const std::vector<SvgSeries>& series, bool log_x,
                bool log_y, const SvgOptions& opt) {
    if (series.empty()) throw UsageError("svg_curves: no series");
    std::ofstream f(path);
    if (!f) throw DataError(path + ": cannot open for writing");

    auto tx = [&](double v) {
        if (!log_x) return v;
        if (v <= 0.0) throw UsageError("svg_curves: log axis requires positive x");
        return std::log10(v);
    };
    auto ty = [&](double v) {
        if (!log_y) return v;
        if (v <= 0.0) throw UsageError("svg_curves: log axis requires positive y");
        return std::log10(v);
    };

    Frame fr;
    bool first = true;
    for (const SvgSeries& s : series) {
        if (s.x.size() != s.y.size()) throw UsageError("svg_curves: ragged series");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double x = tx(s.x[i]);
            const double y = ty(s.y[i]);
            if (first) {
                fr.lo_x = fr.hi_x = x;
                fr.lo_y = fr.hi_y = y;
                first = false;
            }
            fr.lo_x = std::min(fr.lo_x, x);
            fr.hi_x = std::max(fr.hi_x, x);
            fr.lo_y = std::min(fr.lo_y, y);
            fr.hi_y = std::max(fr.hi_y, y);
        }
    }
    if (first) throw UsageError("svg_curves: all series empty");
    fr.px0 = opt.margin;
    fr.px1 = opt.width - opt.margin;
    fr.py0 = opt.height - opt.margin;
    fr.py1 = opt.margin;

    auto axis_label = [&](double v, bool log_axis) {
        return num(log_axis ? std::pow(10.0, v) : v);
    };

    open_svg(f, opt);
    draw_frame(f, fr, axis_label(fr.lo_x, log_x).c_str(), axis_label(fr.hi_x, log_x).c_str(),
               axis_label(fr.lo_y, log_y).c_str(), axis_label(fr.hi_y, log_y).c_str());
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % kPaletteSize];
        f << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < series[s].x.size(); ++i) {
            f << num(fr.sx(tx(series[s].x[i]))) << ',' << num(fr.sy(ty(series[s].y[i])));
            if (i + 1 < series[s].x.size()) f << ' ';
        }
        f << "\"/>\n";
        if (!series[s].name.empty()) {
            f << "<text font-family=\"sans-serif\" font-size=\"12\" fill=\"" << color << "\" x=\""
              << fr.px0 + 8 << "\" y=\"" << fr.py1 + 16 + 14 * static_cast<double>(s) << "\">"
              << series[s].name << "</text>\n";
        }
    }
    f << "</svg>\n";
    if (!f) throw DataError(path + ": write failed");
}

} // namespace nesp
