#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "gzgd/common.hpp"

namespace gzgd {

// Minimal self-contained SVG for unit-square curves (ROC / PR). No external
// plotting dependency; the raw points always ship alongside as CSV.
inline void write_curve_svg(const std::string& path, const std::string& title,
                            const std::string& xlabel, const std::string& ylabel,
                            const std::vector<std::pair<double, double>>& points,
                            bool diagonal = false) {
    const int size = 480, margin = 56;
    const double span = size - 2 * margin;
    auto px = [&](double x) { return margin + x * span; };
    auto py = [&](double y) { return size - margin - y * span; };

    std::ofstream f(path);
    if (!f) throw DataError("cannot write svg: " + path);
    f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << size << "' height='" << size
      << "' viewBox='0 0 " << size << " " << size << "'>\n";
    f << "<rect width='100%' height='100%' fill='white'/>\n";
    f << "<text x='" << size / 2 << "' y='24' text-anchor='middle' font-size='15' "
         "font-family='sans-serif'>" << title << "</text>\n";
    // axes + ticks
    f << "<rect x='" << margin << "' y='" << margin << "' width='" << span << "' height='" << span
      << "' fill='none' stroke='black'/>\n";
    char buf[256];
    for (int i = 0; i <= 5; ++i) {
        const double v = i / 5.0;
        std::snprintf(buf, sizeof(buf),
                      "<line x1='%.1f' y1='%.1f' x2='%.1f' y2='%.1f' stroke='black'/>\n", px(v),
                      py(0.0), px(v), py(0.0) + 5);
        f << buf;
        std::snprintf(buf, sizeof(buf),
                      "<text x='%.1f' y='%.1f' text-anchor='middle' font-size='11' "
                      "font-family='sans-serif'>%.1f</text>\n",
                      px(v), py(0.0) + 20, v);
        f << buf;
        std::snprintf(buf, sizeof(buf),
                      "<line x1='%.1f' y1='%.1f' x2='%.1f' y2='%.1f' stroke='black'/>\n",
                      px(0.0) - 5, py(v), px(0.0), py(v));
        f << buf;
        std::snprintf(buf, sizeof(buf),
                      "<text x='%.1f' y='%.1f' text-anchor='end' font-size='11' "
                      "font-family='sans-serif'>%.1f</text>\n",
                      px(0.0) - 9, py(v) + 4, v);
        f << buf;
    }
    f << "<text x='" << size / 2 << "' y='" << size - 10
      << "' text-anchor='middle' font-size='13' font-family='sans-serif'>" << xlabel << "</text>\n";
    f << "<text x='16' y='" << size / 2
      << "' text-anchor='middle' font-size='13' font-family='sans-serif' transform='rotate(-90 16 "
      << size / 2 << ")'>" << ylabel << "</text>\n";
    if (diagonal) {
        std::snprintf(buf, sizeof(buf),
                      "<line x1='%.1f' y1='%.1f' x2='%.1f' y2='%.1f' stroke='gray' "
                      "stroke-dasharray='4'/>\n",
                      px(0.0), py(0.0), px(1.0), py(1.0));
        f << buf;
    }
    f << "<polyline fill='none' stroke='#1f77b4' stroke-width='2' points='";
    for (const auto& p : points) {
        std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px(p.first), py(p.second));
        f << buf;
    }
    f << "'/>\n</svg>\n";
}

inline void write_curve_csv(const std::string& path, const std::string& xname,
                            const std::string& yname,
                            const std::vector<std::pair<double, double>>& points) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot write csv: " + path);
    f << xname << "," << yname << "\n";
    char buf[80];
    for (const auto& p : points) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", p.first, p.second);
        f << buf;
    }
}

}  // namespace gzgd
