#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "gzgd/dataset.hpp"
#include "gzgd/rng.hpp"

namespace gzgd {

// Deterministic clip generator. Each clip holds striped patches bouncing
// inside disjoint cells; exactly one patch (the "tool") carries the class
// cue as its stripe orientation (vertical = successful, horizontal =
// unsuccessful), the rest fill up a class-balanced orientation multiset so
// that whole-frame orientation statistics stay at chance. The gaze trace
// follows the tool with jitter and a configurable missing rate, which is
// what makes the cue recoverable only through gaze.
struct SynthConfig {
    int clips = 40;
    int frames = 24;
    int height = 64;
    int width = 64;
    double ratio = 0.5;  // fraction of successful clips (paper ratio: 325/454)
    double gaze_jitter = 2.0;
    double missing_rate = 0.1;
    int distractors = 3;
    double noise = 6.0;  // background Gaussian sigma in gray levels
    std::uint64_t seed = 42;

    void validate() const {
        if (clips < 2) throw DataError("synth: need at least 2 clips");
        if (frames < 1) throw DataError("synth: frames must be >= 1");
        if (height < 16 || width < 16) throw DataError("synth: size must be at least 16x16");
        if (!(ratio > 0.0 && ratio < 1.0)) throw DataError("synth: ratio must be in (0,1)");
        if (!(missing_rate >= 0.0 && missing_rate < 1.0))
            throw DataError("synth: missing rate must be in [0,1)");
        if (distractors < 0) throw DataError("synth: distractor count must be >= 0");
        const int n_pos = static_cast<int>(std::lround(ratio * clips));
        if (n_pos < 1 || n_pos >= clips)
            throw DataError("synth: ratio leaves a class empty for this clip count");
    }
};

namespace sydet {

struct Patch {
    double x, y;    // top-left, float state
    double vx, vy;
    double x_lo, x_hi, y_lo, y_hi;  // movement domain (top-left bounds)
    int orientation;                // 1 = vertical stripes, 0 = horizontal
    int phase;
};

inline void bounce(double& p, double& v, double lo, double hi) {
    p += v;
    if (p < lo) {
        p = 2.0 * lo - p;
        v = -v;
    }
    if (p > hi) {
        p = 2.0 * hi - p;
        v = -v;
    }
    if (p < lo) p = lo;  // domain narrower than one step
}

}  // namespace sydet

struct SynthClipResult {
    std::vector<Image8> frames;
    GazeTrace gaze;
};

// Generates one clip deterministically from its own rng.
inline SynthClipResult synth_clip(const SynthConfig& cfg, int label, Rng& rng) {
    const int k = cfg.distractors + 1;
    const int grid = std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(k)))));
    const int cell_h = cfg.height / grid;
    const int cell_w = cfg.width / grid;
    const int patch = std::max(6, std::min(14, std::min(cell_h, cell_w) - 4));
    const double contrast = 50.0;

    // class-balanced orientation pool; the tool consumes one instance of its
    // own orientation when available
    std::vector<int> pool;
    for (int i = 0; i < k; ++i) pool.push_back(i % 2 == 0 ? 1 : 0);
    const int tool_ori = label;
    auto it = std::find(pool.begin(), pool.end(), tool_ori);
    if (it != pool.end()) pool.erase(it);
    rng.shuffle(pool.begin(), pool.end());

    // one distinct cell per patch, tool cell random
    std::vector<int> cells(static_cast<std::size_t>(grid) * grid);
    for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = static_cast<int>(i);
    rng.shuffle(cells.begin(), cells.end());

    std::vector<sydet::Patch> patches(k);
    for (int i = 0; i < k; ++i) {
        const int cy = cells[i] / grid, cx = cells[i] % grid;
        sydet::Patch& p = patches[i];
        p.x_lo = cx * cell_w + 1.0;
        p.x_hi = cx * cell_w + cell_w - patch - 1.0;
        p.y_lo = cy * cell_h + 1.0;
        p.y_hi = cy * cell_h + cell_h - patch - 1.0;
        if (p.x_hi < p.x_lo) p.x_hi = p.x_lo;
        if (p.y_hi < p.y_lo) p.y_hi = p.y_lo;
        p.x = rng.uniform(p.x_lo, p.x_hi);
        p.y = rng.uniform(p.y_lo, p.y_hi);
        const double sx = rng.uniform() < 0.5 ? -1.0 : 1.0;
        const double sy = rng.uniform() < 0.5 ? -1.0 : 1.0;
        p.vx = sx * rng.uniform(0.8, 2.5);
        p.vy = sy * rng.uniform(0.8, 2.5);
        p.orientation = i == 0 ? tool_ori : pool[i - 1];
        p.phase = static_cast<int>(rng.below(4));
    }

    SynthClipResult out;
    out.gaze.points.resize(cfg.frames);
    for (int t = 0; t < cfg.frames; ++t) {
        Image8 img(cfg.height, cfg.width);
        for (auto& px : img.px) {
            const double v = 128.0 + rng.normal(0.0, cfg.noise);
            px = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
        // distractors first, tool drawn last
        for (int i = k - 1; i >= 0; --i) {
            const sydet::Patch& p = patches[i];
            const int x0 = static_cast<int>(std::lround(p.x));
            const int y0 = static_cast<int>(std::lround(p.y));
            for (int dy = 0; dy < patch; ++dy) {
                for (int dx = 0; dx < patch; ++dx) {
                    const int coord = p.orientation == 1 ? dx : dy;
                    const bool band = (((coord + p.phase) / 2) % 2) == 0;
                    const double v = 128.0 + (band ? contrast : -contrast);
                    img.at(y0 + dy, x0 + dx) =
                        static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
                }
            }
        }
        out.frames.push_back(std::move(img));

        GazePoint& g = out.gaze.points[t];
        g.frame = t;
        const bool missing = rng.uniform() < cfg.missing_rate;
        if (!missing) {
            const double half = patch / 2.0;
            g.x = std::clamp(patches[0].x + half + rng.normal(0.0, cfg.gaze_jitter), 0.0,
                             static_cast<double>(cfg.width - 1));
            g.y = std::clamp(patches[0].y + half + rng.normal(0.0, cfg.gaze_jitter), 0.0,
                             static_cast<double>(cfg.height - 1));
            g.present = true;
        }

        for (auto& p : patches) {
            sydet::bounce(p.x, p.vx, p.x_lo, p.x_hi);
            sydet::bounce(p.y, p.vy, p.y_lo, p.y_hi);
        }
    }
    return out;
}

inline std::string synth_clip_id(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "clip_%04d", index);
    return buf;
}

// Writes the full dataset layout: labels.csv, per-clip frames and gaze.csv.
inline std::vector<LabelRow> synth_generate(const SynthConfig& cfg, const fs::path& out) {
    cfg.validate();
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw DataError("synth: cannot create output directory " + out.string());

    const int n_pos = static_cast<int>(std::lround(cfg.ratio * cfg.clips));
    std::vector<int> labels(cfg.clips, 0);
    for (int i = 0; i < n_pos; ++i) labels[i] = 1;
    Rng label_rng(derive_seed(cfg.seed, "labels"));
    label_rng.shuffle(labels.begin(), labels.end());

    std::vector<LabelRow> rows;
    for (int i = 0; i < cfg.clips; ++i) {
        const std::string id = synth_clip_id(i);
        Rng clip_rng(derive_seed(cfg.seed, "clip:" + id));
        SynthClipResult clip = synth_clip(cfg, labels[i], clip_rng);
        clip.gaze.clip_id = id;
        const fs::path dir = out / id;
        save_clip_frames(dir, clip.frames);
        std::ofstream gf(dir / "gaze.csv");
        if (!gf) throw DataError("synth: cannot write gaze.csv in " + dir.string());
        gf << serialize_gaze_csv(clip.gaze);
        rows.push_back({id, labels[i]});
    }
    write_labels(out, rows);
    return rows;
}

struct DatasetSummary {
    int clips = 0;
    int positives = 0;
    int negatives = 0;
    int frames_per_clip = 0;  // first clip's count
    int height = 0, width = 0;
    double missing_fraction = 0.0;
};

inline DatasetSummary synth_describe(const fs::path& root) {
    const auto rows = read_labels(root);
    DatasetSummary s;
    s.clips = static_cast<int>(rows.size());
    long missing = 0, total = 0;
    for (const auto& row : rows) {
        (row.label == 1 ? s.positives : s.negatives)++;
        GazeTrace gaze;
        Clip clip = load_clip(root / row.clip_id, &gaze);
        if (s.frames_per_clip == 0) {
            s.frames_per_clip = clip.t();
            s.height = clip.h();
            s.width = clip.w();
        }
        for (const auto& p : gaze.points) {
            ++total;
            missing += p.present ? 0 : 1;
        }
    }
    s.missing_fraction = total == 0 ? 0.0 : static_cast<double>(missing) / static_cast<double>(total);
    return s;
}

}  // namespace gzgd
