#pragma once

// Static SVG line charts written directly by the library, so plots need no
// external runtime. Output is deterministic: fixed canvas, fixed palette,
// fixed tick rules, %.6g coordinates, no timestamps or generator comments.
// Log axes are requested per axis; nonpositive values on a log axis are an
// error because they have no coordinate.

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mflab/common.hpp"

namespace mflab {

struct PlotSeries {
    std::string label;
    std::vector<std::array<double, 2>> points;  // (x, y) pairs, drawn in order
};

struct PlotAxes {
    std::string title, xlabel, ylabel;
    bool log_x = false, log_y = false;
};

namespace detail {

inline std::string svg_num(double v) { return strf("%.6g", v); }

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

// tick positions covering [lo, hi]: decades on log axes, a rounded step on
// linear axes
inline std::vector<double> axis_ticks(double lo, double hi, bool log_scale) {
    std::vector<double> ticks;
    if (log_scale) {
        const int first = static_cast<int>(std::ceil(std::log10(lo) - 1e-12));
        const int last = static_cast<int>(std::floor(std::log10(hi) + 1e-12));
        for (int e = first; e <= last; ++e) ticks.push_back(std::pow(10.0, e));
        if (ticks.empty()) ticks = {lo, hi};
        return ticks;
    }
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double mult : {1.0, 2.0, 5.0, 10.0})
        if (mag * mult >= raw) {
            step = mag * mult;
            break;
        }
    const double start = std::ceil(lo / step - 1e-9) * step;
    for (double v = start; v <= hi + 1e-9 * span; v += step) ticks.push_back(v);
    return ticks;
}

}  // namespace detail

inline void svg_line_chart(std::ostream& os, const PlotAxes& axes,
                           const std::vector<PlotSeries>& series) {
    size_t total = 0;
    for (const PlotSeries& s : series) total += s.points.size();
    if (total == 0) throw std::invalid_argument("svg_line_chart: empty table");

    double xlo = 0, xhi = 0, ylo = 0, yhi = 0;
    bool first = true;
    for (const PlotSeries& s : series)
        for (const auto& p : s.points) {
            if (!std::isfinite(p[0]) || !std::isfinite(p[1]))
                throw std::invalid_argument("svg_line_chart: non-finite point");
            if ((axes.log_x && p[0] <= 0.0) || (axes.log_y && p[1] <= 0.0))
                throw std::invalid_argument("svg_line_chart: nonpositive value on a log axis");
            if (first) {
                xlo = xhi = p[0];
                ylo = yhi = p[1];
                first = false;
            } else {
                xlo = std::min(xlo, p[0]);
                xhi = std::max(xhi, p[0]);
                ylo = std::min(ylo, p[1]);
                yhi = std::max(yhi, p[1]);
            }
        }
    // widen degenerate ranges so single points and constant series still plot
    auto widen = [](double& lo, double& hi, bool log_scale) {
        if (hi > lo) return;
        if (log_scale) {
            lo /= 2.0;
            hi *= 2.0;
        } else {
            lo -= 0.5;
            hi += 0.5;
        }
    };
    widen(xlo, xhi, axes.log_x);
    widen(ylo, yhi, axes.log_y);

    const double W = 760, H = 520, ml = 80, mr = 24, mt = 48, mb = 64;
    auto xmap = [&](double v) {
        const double a = axes.log_x ? std::log10(v) : v;
        const double lo = axes.log_x ? std::log10(xlo) : xlo;
        const double hi = axes.log_x ? std::log10(xhi) : xhi;
        return ml + (a - lo) / (hi - lo) * (W - ml - mr);
    };
    auto ymap = [&](double v) {
        const double a = axes.log_y ? std::log10(v) : v;
        const double lo = axes.log_y ? std::log10(ylo) : ylo;
        const double hi = axes.log_y ? std::log10(yhi) : yhi;
        return H - mb - (a - lo) / (hi - lo) * (H - mt - mb);
    };

    static const std::array<const char*, 6> palette = {"#1b6ca8", "#c0392b", "#277a4b",
                                                       "#8e44ad", "#b9770e", "#2c3e50"};

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"#ffffff\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"28\" font-family=\"sans-serif\" font-size=\"16\" "
          "text-anchor=\"middle\">"
       << detail::xml_escape(axes.title) << "</text>\n";

    for (double tx : detail::axis_ticks(xlo, xhi, axes.log_x)) {
        const double px = xmap(tx);
        os << "<line x1=\"" << detail::svg_num(px) << "\" y1=\"" << mt << "\" x2=\""
           << detail::svg_num(px) << "\" y2=\"" << H - mb << "\" stroke=\"#dddddd\"/>\n";
        os << "<text x=\"" << detail::svg_num(px) << "\" y=\"" << H - mb + 18
           << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">"
           << detail::svg_num(tx) << "</text>\n";
    }
    for (double ty : detail::axis_ticks(ylo, yhi, axes.log_y)) {
        const double py = ymap(ty);
        os << "<line x1=\"" << ml << "\" y1=\"" << detail::svg_num(py) << "\" x2=\"" << W - mr
           << "\" y2=\"" << detail::svg_num(py) << "\" stroke=\"#dddddd\"/>\n";
        os << "<text x=\"" << ml - 6 << "\" y=\"" << detail::svg_num(py + 4)
           << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">"
           << detail::svg_num(ty) << "</text>\n";
    }
    os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr << "\" height=\""
       << H - mt - mb << "\" fill=\"none\" stroke=\"#444444\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"" << H - 18
       << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">"
       << detail::xml_escape(axes.xlabel) << "</text>\n";
    os << "<text x=\"20\" y=\"" << H / 2
       << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
          "transform=\"rotate(-90 20 "
       << H / 2 << ")\">" << detail::xml_escape(axes.ylabel) << "</text>\n";

    for (size_t k = 0; k < series.size(); ++k) {
        const char* color = palette[k % palette.size()];
        if (!series[k].points.empty()) {
            os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
            for (const auto& p : series[k].points)
                os << detail::svg_num(xmap(p[0])) << ',' << detail::svg_num(ymap(p[1])) << ' ';
            os << "\"/>\n";
            for (const auto& p : series[k].points)
                os << "<circle cx=\"" << detail::svg_num(xmap(p[0])) << "\" cy=\""
                   << detail::svg_num(ymap(p[1])) << "\" r=\"2.6\" fill=\"" << color << "\"/>\n";
        }
        const double ly = mt + 16 + 18.0 * static_cast<double>(k);
        os << "<line x1=\"" << W - mr - 150 << "\" y1=\"" << detail::svg_num(ly - 4) << "\" x2=\""
           << W - mr - 126 << "\" y2=\"" << detail::svg_num(ly - 4) << "\" stroke=\"" << color
           << "\" stroke-width=\"1.8\"/>\n";
        os << "<text x=\"" << W - mr - 120 << "\" y=\"" << detail::svg_num(ly)
           << "\" font-family=\"sans-serif\" font-size=\"12\">" << detail::xml_escape(series[k].label)
           << "</text>\n";
    }
    os << "</svg>\n";
}

}  // namespace mflab
