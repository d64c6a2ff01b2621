#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "divq/errors.hpp"
#include "divq/similarity.hpp"
#include "divq/stats.hpp"

namespace divq {

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> mean;
    std::vector<double> band;  // half-width of the confidence band, may be zero
};

// Mean curve with a 1.96 * stderr band across aligned per-seed curves
// (stderr = sample std / sqrt(n); a single curve collapses the band).
inline PlotSeries aggregate_series(const std::string& label, const std::vector<double>& x,
                                   const std::vector<std::vector<double>>& curves) {
    if (curves.empty()) throw domain_error("aggregate_series: no curves");
    for (const auto& c : curves)
        if (c.size() != x.size())
            throw shape_error("aggregate_series: curve length does not match x grid");
    PlotSeries s;
    s.label = label;
    s.x = x;
    s.mean.resize(x.size());
    s.band.resize(x.size());
    const double n = static_cast<double>(curves.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::vector<double> col;
        col.reserve(curves.size());
        for (const auto& c : curves) col.push_back(c[i]);
        s.mean[i] = sample_mean(col);
        s.band[i] = curves.size() > 1
                        ? 1.96 * std::sqrt(sample_variance(col)) / std::sqrt(n)
                        : 0.0;
    }
    return s;
}

namespace svg_detail {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline std::string fmt_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

inline const char* palette(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    return colors[i % 8];
}

// Blue -> yellow -> red ramp over [0, 1].
inline std::string heat_color(double v) {
    v = std::clamp(v, 0.0, 1.0);
    double r, g, b;
    if (v < 0.5) {
        const double t = v / 0.5;
        r = 49 + t * (254 - 49);
        g = 54 + t * (224 - 54);
        b = 149 + t * (144 - 149);
    } else {
        const double t = (v - 0.5) / 0.5;
        r = 254 + t * (165 - 254);
        g = 224 + t * (0 - 224);
        b = 144 + t * (38 - 144);
    }
    char buf[16];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", static_cast<int>(r),
                  static_cast<int>(g), static_cast<int>(b));
    return buf;
}

}  // namespace svg_detail

inline void write_line_chart(const std::string& path, const std::vector<PlotSeries>& series,
                             const std::string& title, const std::string& x_label,
                             const std::string& y_label) {
    if (series.empty()) throw domain_error("write_line_chart: no series");
    using svg_detail::fmt;
    using svg_detail::fmt_tick;

    const double width = 820, height = 520;
    const double left = 70, right = 790, top = 50, bottom = 470;

    double x_min = series[0].x.front(), x_max = series[0].x.back();
    double y_min = 0.0, y_max = 0.0;
    bool first = true;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            x_min = std::min(x_min, s.x[i]);
            x_max = std::max(x_max, s.x[i]);
            const double lo = s.mean[i] - s.band[i], hi = s.mean[i] + s.band[i];
            if (first) {
                y_min = lo;
                y_max = hi;
                first = false;
            } else {
                y_min = std::min(y_min, lo);
                y_max = std::max(y_max, hi);
            }
        }
    }
    if (x_max == x_min) x_max = x_min + 1.0;
    if (y_max == y_min) {
        y_max += 1.0;
        y_min -= 1.0;
    }
    const double y_pad = 0.05 * (y_max - y_min);
    y_min -= y_pad;
    y_max += y_pad;

    auto sx = [&](double x) { return left + (x - x_min) / (x_max - x_min) * (right - left); };
    auto sy = [&](double y) { return bottom - (y - y_min) / (y_max - y_min) * (bottom - top); };

    std::ofstream out(path);
    if (!out) throw parse_error("svg: cannot write " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << (width / 2) << "\" y=\"28\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";

    // axes and ticks
    out << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right << "\" y2=\""
        << bottom << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
        << bottom << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 5; ++t) {
        const double xv = x_min + (x_max - x_min) * t / 5.0;
        const double yv = y_min + (y_max - y_min) * t / 5.0;
        out << "<line x1=\"" << fmt(sx(xv)) << "\" y1=\"" << bottom << "\" x2=\"" << fmt(sx(xv))
            << "\" y2=\"" << bottom + 5 << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << fmt(sx(xv)) << "\" y=\"" << bottom + 20
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << fmt_tick(xv) << "</text>\n";
        out << "<line x1=\"" << left - 5 << "\" y1=\"" << fmt(sy(yv)) << "\" x2=\"" << left
            << "\" y2=\"" << fmt(sy(yv)) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << left - 8 << "\" y=\"" << fmt(sy(yv) + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
            << fmt_tick(yv) << "</text>\n";
    }
    out << "<text x=\"" << (left + right) / 2 << "\" y=\"" << height - 8
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << x_label
        << "</text>\n";
    out << "<text x=\"18\" y=\"" << (top + bottom) / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        << "transform=\"rotate(-90 18 " << (top + bottom) / 2 << ")\">" << y_label
        << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const PlotSeries& s = series[k];
        const char* color = svg_detail::palette(k);
        bool has_band = false;
        for (double b : s.band)
            if (b > 0.0) has_band = true;
        if (has_band) {
            out << "<polygon class=\"band\" fill=\"" << color << "\" fill-opacity=\"0.18\" "
                << "stroke=\"none\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i)
                out << fmt(sx(s.x[i])) << "," << fmt(sy(s.mean[i] + s.band[i])) << " ";
            for (std::size_t i = s.x.size(); i-- > 0;)
                out << fmt(sx(s.x[i])) << "," << fmt(sy(s.mean[i] - s.band[i])) << " ";
            out << "\"/>\n";
        }
        out << "<polyline class=\"mean\" fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.8\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            out << fmt(sx(s.x[i])) << "," << fmt(sy(s.mean[i])) << " ";
        out << "\"/>\n";
        // legend entry
        const double ly = top + 18.0 * static_cast<double>(k);
        out << "<line x1=\"" << right - 150 << "\" y1=\"" << fmt(ly) << "\" x2=\""
            << right - 125 << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << right - 120 << "\" y=\"" << fmt(ly + 4)
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
    }
    out << "</svg>\n";
}

inline void write_heatmap_svg(const std::string& path, const SimilarityHeatmap& hm,
                              const std::string& title) {
    const std::size_t rows = hm.row_labels.size();
    const std::size_t cols = hm.col_labels.size();
    const double cell = 56.0;
    const double left = 90, top = 60;
    const double width = left + cols * cell + 40;
    const double height = top + rows * cell + 60;

    std::ofstream out(path);
    if (!out) throw parse_error("svg: cannot write " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";

    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const double x = left + c * cell;
            // row 0 rendered at the bottom, matching axis orientation
            const double y = top + (rows - 1 - r) * cell;
            const bool missing = hm.missing(r, c);
            const std::string fill =
                missing ? "#cccccc" : svg_detail::heat_color(hm.values.at(r, c));
            out << "<rect class=\"cell\" x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell
                << "\" height=\"" << cell << "\" fill=\"" << fill
                << "\" stroke=\"white\"/>\n";
            char label[16];
            if (missing) {
                std::snprintf(label, sizeof(label), "--");
            } else {
                std::snprintf(label, sizeof(label), "%.2f", hm.values.at(r, c));
            }
            out << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
                << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
                << label << "</text>\n";
        }
    }
    for (std::size_t r = 0; r < rows; ++r)
        out << "<text x=\"" << left - 6 << "\" y=\"" << top + (rows - 1 - r) * cell + cell / 2 + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
            << hm.row_labels[r] << "</text>\n";
    for (std::size_t c = 0; c < cols; ++c)
        out << "<text x=\"" << left + c * cell + cell / 2 << "\" y=\"" << top + rows * cell + 16
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << hm.col_labels[c] << "</text>\n";
    out << "</svg>\n";
}

}  // namespace divq
