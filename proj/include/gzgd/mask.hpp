#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gzgd/gaze.hpp"
#include "gzgd/image.hpp"

namespace gzgd {

// Gaze-to-mask pipeline: a unit impulse at the gaze pixel is spread to
// neighbours by a distance decay alpha^d cut off below beta, per-point grids
// are max-combined, the result is smoothed with a normalized Gaussian and
// floor-quantized to 8 bits.
enum class MaskMode { per_frame, combined };

struct MaskConfig {
    double alpha = 0.75;  // decay rate, in (0,1)
    double beta = 0.25;   // propagation floor, in (0,1)
    double sigma = 2.0;   // Gaussian std-dev in pixels (2.0 suits 64x64; scale ~H/32)
    int kernel_radius = 0; // 0 = derive as ceil(3*sigma)
    int kappa = 255;       // quantization scale
    MaskMode mode = MaskMode::per_frame;
    bool interpolate = true;  // fill missing gaze temporally before masking

    int radius() const {
        return kernel_radius > 0 ? kernel_radius : static_cast<int>(std::ceil(3.0 * sigma));
    }

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0)) throw DataError("mask: alpha must be in (0,1)");
        if (!(beta > 0.0 && beta < 1.0)) throw DataError("mask: beta must be in (0,1)");
        if (!(sigma > 0.0)) throw DataError("mask: sigma must be > 0");
        if (radius() < 1) throw DataError("mask: kernel radius must be >= 1");
        if (kappa < 1 || kappa > 255) throw DataError("mask: kappa must be in [1,255]");
    }
};

struct VisualMask {
    Grid grid;        // values in [0,1]
    Image8 quantized; // floor(grid * kappa)
};

namespace maskdet {

// Gaze coordinates are rounded to the nearest pixel and clamped to the grid.
inline void rounded_pixel(const GazePoint& g, int h, int w, int& px, int& py) {
    px = static_cast<int>(std::lround(g.x));
    py = static_cast<int>(std::lround(g.y));
    if (px < 0) px = 0;
    if (py < 0) py = 0;
    if (px > w - 1) px = w - 1;
    if (py > h - 1) py = h - 1;
}

}  // namespace maskdet

// Unit impulse at the gaze pixel, zero elsewhere.
inline Grid delta_grid(const GazePoint& gaze, int h, int w) {
    if (!gaze.present) throw std::invalid_argument("delta_grid: gaze point not present");
    Grid g(h, w, 0.0);
    int px, py;
    maskdet::rounded_pixel(gaze, h, w, px, py);
    g.at(py, px) = 1.0;
    return g;
}

// Pixel (i,j) holds alpha^d for d = Euclidean distance to the gaze pixel,
// exactly 0 once alpha^d drops below beta. Ties (alpha^d == beta) keep the
// value. Only the window that can hold nonzero values is visited; outside it
// alpha^d < beta by construction.
inline Grid propagate_decay(const GazePoint& gaze, const MaskConfig& cfg, int h, int w) {
    if (!gaze.present) throw std::invalid_argument("propagate_decay: gaze point not present");
    Grid g(h, w, 0.0);
    int px, py;
    maskdet::rounded_pixel(gaze, h, w, px, py);
    const double d_max = std::log(cfg.beta) / std::log(cfg.alpha);
    const int r = static_cast<int>(std::floor(d_max)) + 1;
    const int y0 = std::max(0, py - r), y1 = std::min(h - 1, py + r);
    const int x0 = std::max(0, px - r), x1 = std::min(w - 1, px + r);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const double dx = static_cast<double>(x - px);
            const double dy = static_cast<double>(y - py);
            const double d = std::sqrt(dx * dx + dy * dy);
            const double val = std::pow(cfg.alpha, d);
            if (val >= cfg.beta) g.at(y, x) = val;
        }
    }
    return g;
}

// Element-wise maximum across per-point grids.
inline Grid combine_masks(const std::vector<Grid>& masks) {
    if (masks.empty()) throw std::invalid_argument("combine_masks: empty sequence");
    Grid out = masks[0];
    for (size_t k = 1; k < masks.size(); ++k) {
        if (!masks[k].same_shape(out))
            throw std::invalid_argument("combine_masks: shape mismatch");
        for (size_t i = 0; i < out.v.size(); ++i)
            out.v[i] = std::max(out.v[i], masks[k].v[i]);
    }
    return out;
}

// Isotropic Gaussian kernel values before normalization, including the
// analytic 1/(2*pi*sigma^2) factor.
inline Grid gaussian_kernel_raw(const MaskConfig& cfg) {
    const int r = cfg.radius();
    const int n = 2 * r + 1;
    Grid k(n, n, 0.0);
    const double inv2s2 = 1.0 / (2.0 * cfg.sigma * cfg.sigma);
    const double norm = inv2s2 / 3.14159265358979323846;  // 1/(2*pi*sigma^2)
    for (int y = -r; y <= r; ++y)
        for (int x = -r; x <= r; ++x)
            k.at(y + r, x + r) = norm * std::exp(-(static_cast<double>(x * x + y * y)) * inv2s2);
    return k;
}

// Truncated kernel renormalized to sum exactly 1, preserving mask mass.
inline Grid gaussian_kernel(const MaskConfig& cfg) {
    Grid k = gaussian_kernel_raw(cfg);
    double sum = 0.0;
    for (double v : k.v) sum += v;
    for (double& v : k.v) v /= sum;
    return k;
}

// Discrete convolution with zero padding at the borders.
inline Grid gaussian_smooth(const Grid& grid, const MaskConfig& cfg) {
    const Grid k = gaussian_kernel(cfg);
    const int r = cfg.radius();
    Grid out(grid.h, grid.w, 0.0);
    for (int i = 0; i < grid.h; ++i) {
        for (int j = 0; j < grid.w; ++j) {
            double acc = 0.0;
            for (int u = -r; u <= r; ++u) {
                const int y = i - u;
                if (y < 0 || y >= grid.h) continue;
                const double* krow = &k.v[static_cast<size_t>(u + r) * k.w];
                const double* grow = &grid.v[static_cast<size_t>(y) * grid.w];
                for (int v = -r; v <= r; ++v) {
                    const int x = j - v;
                    if (x < 0 || x >= grid.w) continue;
                    acc += krow[v + r] * grow[x];
                }
            }
            out.at(i, j) = acc;
        }
    }
    return out;
}

// V = floor(G * kappa); grid values must already be in [0,1].
inline Image8 quantize(const Grid& grid, const MaskConfig& cfg) {
    Image8 img(grid.h, grid.w);
    for (size_t i = 0; i < grid.v.size(); ++i) {
        const double g = grid.v[i];
        if (g < 0.0 || g > 1.0)
            throw DataError("quantize: grid value outside [0,1]: " + std::to_string(g));
        img.px[i] = static_cast<std::uint8_t>(std::floor(g * cfg.kappa));
    }
    return img;
}

// Full per-clip pipeline. per_frame: each frame's mask comes from its own
// gaze point, frames still missing after (optional) interpolation fall back
// to the combined-clip mask. combined: one mask from all gaze points,
// replicated per frame.
inline std::vector<VisualMask> build_clip_masks(const GazeTrace& trace_in, const MaskConfig& cfg,
                                                int h, int w) {
    cfg.validate();
    GazeTrace trace = cfg.interpolate ? interpolate_missing(trace_in) : trace_in;

    std::vector<const GazePoint*> present;
    for (const auto& p : trace.points)
        if (p.present) present.push_back(&p);
    if (present.empty())
        throw DataError(
            "build_clip_masks: no usable gaze points; enable interpolation or use combined mode "
            "on a trace with at least one sample");

    std::vector<Grid> point_grids;
    point_grids.reserve(present.size());
    for (const auto* p : present) point_grids.push_back(propagate_decay(*p, cfg, h, w));
    const Grid combined = combine_masks(point_grids);

    std::vector<VisualMask> out;
    out.reserve(trace.points.size());
    if (cfg.mode == MaskMode::combined) {
        VisualMask m;
        m.grid = gaussian_smooth(combined, cfg);
        m.quantized = quantize(m.grid, cfg);
        for (size_t i = 0; i < trace.points.size(); ++i) out.push_back(m);
        return out;
    }
    Grid combined_smooth;
    bool have_fallback = false;
    size_t next_present = 0;
    for (size_t i = 0; i < trace.points.size(); ++i) {
        VisualMask m;
        if (trace.points[i].present) {
            m.grid = gaussian_smooth(point_grids[next_present++], cfg);
        } else {
            if (!have_fallback) {
                combined_smooth = gaussian_smooth(combined, cfg);
                have_fallback = true;
            }
            m.grid = combined_smooth;
        }
        m.quantized = quantize(m.grid, cfg);
        out.push_back(std::move(m));
    }
    return out;
}

// Per-pixel product frame * (mask/kappa), rounded back to 8 bits.
inline std::vector<Image8> apply_mask(const std::vector<Image8>& frames,
                                      const std::vector<VisualMask>& masks,
                                      const MaskConfig& cfg) {
    if (frames.size() != masks.size())
        throw std::invalid_argument("apply_mask: frame/mask count mismatch");
    std::vector<Image8> out;
    out.reserve(frames.size());
    for (size_t t = 0; t < frames.size(); ++t) {
        const Image8& f = frames[t];
        const Image8& m = masks[t].quantized;
        if (f.h != m.h || f.w != m.w) throw std::invalid_argument("apply_mask: shape mismatch");
        Image8 o(f.h, f.w);
        for (size_t i = 0; i < f.px.size(); ++i) {
            const double scaled = f.px[i] * (static_cast<double>(m.px[i]) / cfg.kappa);
            long v = std::lround(scaled);
            if (v < 0) v = 0;
            if (v > 255) v = 255;
            o.px[i] = static_cast<std::uint8_t>(v);
        }
        out.push_back(std::move(o));
    }
    return out;
}

}  // namespace gzgd
