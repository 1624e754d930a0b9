#pragma once

// Brute-force straight-line evaluation of the gaze->mask pipeline, written
// independently of the library path so the two can be cross-checked. Every
// step is the textbook form: full-grid decay, full-kernel convolution, no
// windowing shortcuts.

#include <cmath>
#include <cstdint>
#include <vector>

namespace mask_oracle {

struct Point {
    double x, y;
};

using Plane = std::vector<std::vector<double>>;

inline Plane decay_plane(const Point& p, double alpha, double beta, int h, int w) {
    const int px = static_cast<int>(std::lround(p.x));
    const int py = static_cast<int>(std::lround(p.y));
    Plane g(h, std::vector<double>(w, 0.0));
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            const double d = std::sqrt(static_cast<double>(j - px) * (j - px) +
                                       static_cast<double>(i - py) * (i - py));
            const double v = std::pow(alpha, d);
            if (v >= beta) g[i][j] = v;
        }
    }
    return g;
}

inline Plane max_combine(const std::vector<Plane>& planes) {
    Plane out = planes.front();
    for (std::size_t k = 1; k < planes.size(); ++k)
        for (std::size_t i = 0; i < out.size(); ++i)
            for (std::size_t j = 0; j < out[i].size(); ++j)
                out[i][j] = std::max(out[i][j], planes[k][i][j]);
    return out;
}

inline Plane kernel(double sigma, int r) {
    const int n = 2 * r + 1;
    Plane k(n, std::vector<double>(n, 0.0));
    double s = 0.0;
    for (int y = -r; y <= r; ++y)
        for (int x = -r; x <= r; ++x) {
            const double v = 1.0 / (2.0 * M_PI * sigma * sigma) *
                             std::exp(-(x * x + y * y) / (2.0 * sigma * sigma));
            k[y + r][x + r] = v;
            s += v;
        }
    for (auto& row : k)
        for (auto& v : row) v /= s;
    return k;
}

inline Plane convolve(const Plane& g, const Plane& k, int r) {
    const int h = static_cast<int>(g.size());
    const int w = static_cast<int>(g[0].size());
    Plane out(h, std::vector<double>(w, 0.0));
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            double acc = 0.0;
            for (int u = -r; u <= r; ++u)
                for (int v = -r; v <= r; ++v) {
                    const int y = i - u, x = j - v;
                    if (y < 0 || y >= h || x < 0 || x >= w) continue;
                    acc += k[u + r][v + r] * g[y][x];
                }
            out[i][j] = acc;
        }
    return out;
}

inline std::vector<std::vector<std::uint8_t>> quantize(const Plane& g, int kappa) {
    std::vector<std::vector<std::uint8_t>> out(g.size(),
                                               std::vector<std::uint8_t>(g[0].size(), 0));
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = 0; j < g[i].size(); ++j)
            out[i][j] = static_cast<std::uint8_t>(std::floor(g[i][j] * kappa));
    return out;
}

// combined-mode mask for a set of points
inline Plane combined_mask(const std::vector<Point>& pts, double alpha, double beta, double sigma,
                           int r, int h, int w) {
    std::vector<Plane> planes;
    for (const auto& p : pts) planes.push_back(decay_plane(p, alpha, beta, h, w));
    return convolve(max_combine(planes), kernel(sigma, r), r);
}

}  // namespace mask_oracle
