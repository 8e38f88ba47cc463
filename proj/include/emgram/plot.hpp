#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "emgram/bench.hpp"
#include "emgram/types.hpp"

namespace emgram {

namespace detail {

inline std::string fmt(double v) {
    std::ostringstream ss;
    ss << v;
    return ss.str();
}

inline const char* series_color(std::size_t i) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
    return palette[i % 5];
}

}  // namespace detail

/// Self-contained SVG rendering of an error table: one log-scale polyline
/// per value column over the first column; tables with two leading index
/// columns (order, param_order, value) render as a log-color heatmap.
inline void emit_plot(const ErrorTable& table, const std::string& path) {
    if (table.data.rows() < 1 || table.columns.size() < 2) {
        throw config_error("emit_plot: empty table");
    }
    const int width = 640, height = 480, ml = 70, mr = 20, mt = 30, mb = 50;
    const double pw = width - ml - mr, ph = height - mt - mb;
    std::ofstream out(path);
    if (!out) throw config_error("emit_plot: cannot open " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    const bool heatmap = table.columns.size() == 3 && table.columns[1] == "param_order";
    const Index vcol_first = heatmap ? 2 : 1;

    // log range of all plotted values, clamped away from zero
    double vmin = 1e300, vmax = -1e300;
    for (Index i = 0; i < table.data.rows(); ++i) {
        for (Index j = vcol_first; j < table.data.cols(); ++j) {
            const double v = table.data(i, j);
            if (v > 0.0) {
                vmin = std::min(vmin, v);
                vmax = std::max(vmax, v);
            }
        }
    }
    if (vmax < vmin) {
        vmin = 1e-16;
        vmax = 1.0;
    }
    const double floor_v = vmin / 10.0;
    const double lmin = std::log10(floor_v), lmax = std::log10(std::max(vmax, floor_v * 10));
    auto ylog = [&](double v) {
        const double l = std::log10(std::max(v, floor_v));
        return mt + ph * (1.0 - (l - lmin) / (lmax - lmin));
    };

    if (heatmap) {
        std::vector<double> xs, ys;
        for (Index i = 0; i < table.data.rows(); ++i) {
            xs.push_back(table.data(i, 0));
            ys.push_back(table.data(i, 1));
        }
        std::sort(xs.begin(), xs.end());
        xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
        std::sort(ys.begin(), ys.end());
        ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
        const double cw = pw / static_cast<double>(xs.size());
        const double ch = ph / static_cast<double>(ys.size());
        for (Index i = 0; i < table.data.rows(); ++i) {
            const auto xi = std::lower_bound(xs.begin(), xs.end(), table.data(i, 0)) - xs.begin();
            const auto yi = std::lower_bound(ys.begin(), ys.end(), table.data(i, 1)) - ys.begin();
            const double v = std::max(table.data(i, 2), floor_v);
            const double t = (std::log10(v) - lmin) / (lmax - lmin);  // 0 = small error
            const int r = static_cast<int>(255 * t);
            const int b = static_cast<int>(255 * (1.0 - t));
            out << "<rect x=\"" << detail::fmt(ml + cw * static_cast<double>(xi)) << "\" y=\""
                << detail::fmt(mt + ph - ch * static_cast<double>(yi + 1)) << "\" width=\""
                << detail::fmt(cw) << "\" height=\"" << detail::fmt(ch) << "\" fill=\"rgb(" << r
                << ",40," << b << ")\"><title>" << table.columns[0] << "=" << table.data(i, 0)
                << " " << table.columns[1] << "=" << table.data(i, 1) << " value="
                << table.data(i, 2) << "</title></rect>\n";
        }
        out << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
            << "\" text-anchor=\"middle\" font-size=\"14\">" << table.columns[0] << "</text>\n"
            << "<text x=\"18\" y=\"" << height / 2 << "\" text-anchor=\"middle\" font-size=\"14\""
            << " transform=\"rotate(-90 18 " << height / 2 << ")\">" << table.columns[1]
            << "</text>\n";
    } else {
        double xmin = table.data.col(0).minCoeff(), xmax = table.data.col(0).maxCoeff();
        if (xmax <= xmin) xmax = xmin + 1.0;
        auto xpos = [&](double x) { return ml + pw * (x - xmin) / (xmax - xmin); };
        // decade grid lines
        for (int d = static_cast<int>(std::ceil(lmin)); d <= static_cast<int>(std::floor(lmax));
             ++d) {
            const double y = ylog(std::pow(10.0, d));
            out << "<line x1=\"" << ml << "\" y1=\"" << detail::fmt(y) << "\" x2=\""
                << width - mr << "\" y2=\"" << detail::fmt(y)
                << "\" stroke=\"#dddddd\"/>\n"
                << "<text x=\"" << ml - 6 << "\" y=\"" << detail::fmt(y + 4)
                << "\" text-anchor=\"end\" font-size=\"11\">1e" << d << "</text>\n";
        }
        for (Index j = 1; j < table.data.cols(); ++j) {
            const char* color = detail::series_color(static_cast<std::size_t>(j - 1));
            out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
            for (Index i = 0; i < table.data.rows(); ++i) {
                out << detail::fmt(xpos(table.data(i, 0))) << ","
                    << detail::fmt(ylog(table.data(i, j))) << " ";
            }
            out << "\"/>\n";
            for (Index i = 0; i < table.data.rows(); ++i) {
                out << "<circle cx=\"" << detail::fmt(xpos(table.data(i, 0))) << "\" cy=\""
                    << detail::fmt(ylog(table.data(i, j))) << "\" r=\"3\" fill=\"" << color
                    << "\"/>\n";
            }
            out << "<text x=\"" << width - mr - 10 << "\" y=\""
                << mt + 16 * static_cast<int>(j) << "\" text-anchor=\"end\" font-size=\"12\""
                << " fill=\"" << color << "\">" << table.columns[static_cast<std::size_t>(j)]
                << "</text>\n";
        }
        out << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
            << "\" text-anchor=\"middle\" font-size=\"14\">" << table.columns[0] << "</text>\n";
    }
    out << "</svg>\n";
    if (!out) throw config_error("emit_plot: write failure on " + path);
}

}  // namespace emgram
