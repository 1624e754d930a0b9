#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gzgd/mask.hpp"
#include "helpers.hpp"
#include "mask_oracle.hpp"

using namespace gzgd;

namespace {
GazePoint pt(double x, double y) { return GazePoint{0, x, y, true}; }
}  // namespace

TEST_CASE("delta_grid places a single impulse") {
    auto g = delta_grid(pt(2, 2), 5, 5);
    double sum = 0.0;
    for (double v : g.v) sum += v;
    CHECK(sum == 1.0);
    CHECK(g.at(2, 2) == 1.0);

    auto corner = delta_grid(pt(0, 0), 3, 3);
    CHECK(corner.at(0, 0) == 1.0);

    auto rounded = delta_grid(pt(2.6, 2.4), 6, 6);
    CHECK(rounded.at(2, 3) == 1.0);  // x rounds to column 3, y to row 2

    GazePoint missing;
    CHECK_THROWS_AS(delta_grid(missing, 5, 5), std::invalid_argument);
}

TEST_CASE("propagate_decay follows the alpha^d law with beta cutoff") {
    MaskConfig cfg;
    auto g = propagate_decay(pt(10, 10), cfg, 21, 21);
    CHECK(g.at(10, 10) == 1.0);                       // alpha^0
    CHECK(g.at(10, 11) == Catch::Approx(0.75));       // alpha^1
    // alpha^(2*sqrt(2)) at the (2,2) diagonal offset, high-precision value
    CHECK(g.at(12, 12) == Catch::Approx(0.44322055011951824).epsilon(1e-12));
    // 0.75^5 = 0.2373046875 < 0.25, so d >= 5 is exactly zero
    CHECK(g.at(10, 15) == 0.0);
    CHECK(g.at(10, 5) == 0.0);

    SECTION("exhaustive over the full neighborhood") {
        for (int y = 0; y < 21; ++y) {
            for (int x = 0; x < 21; ++x) {
                const double d = std::sqrt((x - 10.0) * (x - 10.0) + (y - 10.0) * (y - 10.0));
                const double v = std::pow(0.75, d);
                if (v >= 0.25) {
                    CHECK(g.at(y, x) == v);
                } else {
                    CHECK(g.at(y, x) == 0.0);
                }
            }
        }
    }
}

TEST_CASE("propagate_decay is non-increasing in distance") {
    MaskConfig cfg;
    cfg.alpha = 0.8;
    cfg.beta = 0.1;
    auto g = propagate_decay(pt(12, 9), cfg, 24, 24);
    // sort by distance; values must be non-increasing
    std::vector<std::pair<double, double>> dv;
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 24; ++x)
            dv.emplace_back(std::hypot(x - 12.0, y - 9.0), g.at(y, x));
    std::sort(dv.begin(), dv.end());
    int violations = 0;
    for (size_t i = 1; i < dv.size(); ++i)
        if (dv[i].second > dv[i - 1].second) ++violations;
    CHECK(violations == 0);
}

TEST_CASE("combine_masks is a max-semilattice") {
    gzgd::Rng rng(5);
    auto rand_grid = [&](int h, int w) {
        Grid g(h, w);
        for (auto& v : g.v) v = rng.uniform();
        return g;
    };
    for (int iter = 0; iter < 20; ++iter) {
        Grid a = rand_grid(6, 7), b = rand_grid(6, 7), c = rand_grid(6, 7);
        CHECK(combine_masks({a}) == a);
        CHECK(combine_masks({a, b}) == combine_masks({b, a}));
        CHECK(combine_masks({combine_masks({a, b}), c}) == combine_masks({a, combine_masks({b, c})}));
        CHECK(combine_masks({a, a}) == a);
        CHECK(combine_masks({a, Grid(6, 7, 0.0)}) == a);
    }
    CHECK_THROWS_AS(combine_masks({}), std::invalid_argument);
    CHECK_THROWS_AS(combine_masks({rand_grid(3, 3), rand_grid(4, 4)}), std::invalid_argument);
}

TEST_CASE("gaussian kernel sums to one, is symmetric, matches Eq. 5 at center") {
    for (double sigma : {0.8, 1.0, 2.0, 3.5}) {
        MaskConfig cfg;
        cfg.sigma = sigma;
        auto k = gaussian_kernel(cfg);
        double sum = 0.0;
        for (double v : k.v) sum += v;
        CHECK(sum == Catch::Approx(1.0).margin(1e-12));
        const int r = cfg.radius();
        for (int y = -r; y <= r; ++y)
            for (int x = -r; x <= r; ++x) {
                CHECK(k.at(y + r, x + r) == k.at(-y + r, x + r));
                CHECK(k.at(y + r, x + r) == k.at(y + r, -x + r));
                CHECK(k.at(y + r, x + r) == k.at(x + r, y + r));
            }
    }
    MaskConfig unit;
    unit.sigma = 1.0;
    auto raw = gaussian_kernel_raw(unit);
    const int r = unit.radius();
    CHECK(raw.at(r, r) == Catch::Approx(0.15915494309189535).epsilon(1e-14));  // 1/(2*pi)
}

TEST_CASE("gaussian_smooth: impulse response, zero input, max bound") {
    MaskConfig cfg;
    const int r = cfg.radius();

    Grid zero(20, 20, 0.0);
    CHECK(gaussian_smooth(zero, cfg) == zero);

    Grid impulse(31, 31, 0.0);
    impulse.at(15, 15) = 1.0;
    auto resp = gaussian_smooth(impulse, cfg);
    auto k = gaussian_kernel(cfg);
    for (int y = -r; y <= r; ++y)
        for (int x = -r; x <= r; ++x)
            CHECK(resp.at(15 + y, 15 + x) == Catch::Approx(k.at(y + r, x + r)).margin(1e-15));

    gzgd::Rng rng(9);
    for (int iter = 0; iter < 5; ++iter) {
        Grid g(16, 16);
        double mx = 0.0;
        for (auto& v : g.v) {
            v = rng.uniform();
            mx = std::max(mx, v);
        }
        auto s = gaussian_smooth(g, cfg);
        for (double v : s.v) {
            CHECK(v >= 0.0);
            CHECK(v <= mx + 1e-12);
        }
    }
}

TEST_CASE("quantize floors to kappa steps") {
    MaskConfig cfg;
    Grid g(1, 3);
    g.v = {1.0, 0.5, 0.0};
    auto q = quantize(g, cfg);
    CHECK(q.px[0] == 255);
    CHECK(q.px[1] == 127);  // floor(127.5)
    CHECK(q.px[2] == 0);

    Grid bad(1, 1);
    bad.v = {1.5};
    CHECK_THROWS_AS(quantize(bad, cfg), DataError);
}

TEST_CASE("library pipeline matches the straight-line oracle") {
    gzgd::Rng rng(101);
    MaskConfig cfg;
    const int h = 32, w = 32;
    for (int iter = 0; iter < 30; ++iter) {
        const int n_pts = 1 + static_cast<int>(rng.below(4));
        std::vector<mask_oracle::Point> opts;
        GazeTrace trace;
        trace.points.resize(n_pts);
        for (int i = 0; i < n_pts; ++i) {
            const double x = rng.uniform(0.0, w - 1.0);
            const double y = rng.uniform(0.0, h - 1.0);
            opts.push_back({x, y});
            trace.points[i] = {i, x, y, true};
        }
        cfg.mode = MaskMode::combined;
        auto masks = build_clip_masks(trace, cfg, h, w);
        auto oracle =
            mask_oracle::combined_mask(opts, cfg.alpha, cfg.beta, cfg.sigma, cfg.radius(), h, w);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                REQUIRE(masks[0].grid.at(y, x) == Catch::Approx(oracle[y][x]).margin(1e-12));
        auto oq = mask_oracle::quantize(oracle, cfg.kappa);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) REQUIRE(masks[0].quantized.at(y, x) == oq[y][x]);
    }
}

TEST_CASE("build_clip_masks per-frame keeps the peak near the gaze point") {
    MaskConfig cfg;
    GazeTrace trace;
    trace.points = {{0, 20.0, 14.0, true}};
    auto masks = build_clip_masks(trace, cfg, 32, 32);
    REQUIRE(masks.size() == 1);
    int best_x = 0, best_y = 0;
    double best = -1.0;
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
            if (masks[0].grid.at(y, x) > best) {
                best = masks[0].grid.at(y, x);
                best_x = x;
                best_y = y;
            }
    CHECK(std::abs(best_x - 20) <= 1);
    CHECK(std::abs(best_y - 14) <= 1);
}

TEST_CASE("combined mode keeps both distant gaze points as local maxima") {
    MaskConfig cfg;
    cfg.mode = MaskMode::combined;
    GazeTrace trace;
    trace.points = {{0, 8.0, 8.0, true}, {1, 24.0, 24.0, true}};
    auto masks = build_clip_masks(trace, cfg, 32, 32);
    auto is_local_max = [&](int cy, int cx) {
        const double v = masks[0].grid.at(cy, cx);
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx)
                if (masks[0].grid.at(cy + dy, cx + dx) > v) return false;
        return true;
    };
    CHECK(is_local_max(8, 8));
    CHECK(is_local_max(24, 24));
}

TEST_CASE("per-frame missing frames fall back to the combined mask") {
    MaskConfig cfg;
    cfg.interpolate = false;
    GazeTrace trace;
    trace.points = {{0, 5.0, 5.0, true}, {1, 0.0, 0.0, false}, {2, 26.0, 26.0, true}};
    auto masks = build_clip_masks(trace, cfg, 32, 32);
    REQUIRE(masks.size() == 3);
    // fallback frame must show influence from both present points
    CHECK(masks[1].grid.at(5, 5) > 0.1);
    CHECK(masks[1].grid.at(26, 26) > 0.1);
    // present frames only their own
    CHECK(masks[0].grid.at(26, 26) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("all-missing trace without interpolation is an actionable error") {
    MaskConfig cfg;
    cfg.interpolate = false;
    GazeTrace trace;
    trace.points = {{0, 0.0, 0.0, false}, {1, 0.0, 0.0, false}};
    try {
        build_clip_masks(trace, cfg, 16, 16);
        FAIL("expected error");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("interpolation") != std::string::npos);
        CHECK(msg.find("combined") != std::string::npos);
    }
}

TEST_CASE("mask pipeline is deterministic") {
    MaskConfig cfg;
    GazeTrace trace;
    trace.points = {{0, 7.3, 9.9, true}, {1, 0.0, 0.0, false}, {2, 20.0, 3.0, true}};
    auto a = build_clip_masks(trace, cfg, 48, 40);
    auto b = build_clip_masks(trace, cfg, 48, 40);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].grid == b[i].grid);
        CHECK(a[i].quantized == b[i].quantized);
    }
}

TEST_CASE("apply_mask scales frames per pixel") {
    MaskConfig cfg;
    std::vector<Image8> frames(1, Image8(4, 4));
    for (size_t i = 0; i < frames[0].px.size(); ++i)
        frames[0].px[i] = static_cast<std::uint8_t>(10 * i);

    std::vector<VisualMask> full(1), zero(1);
    full[0].quantized = Image8(4, 4, 255);
    zero[0].quantized = Image8(4, 4, 0);

    CHECK(apply_mask(frames, full, cfg)[0] == frames[0]);
    const auto blacked = apply_mask(frames, zero, cfg);
    for (auto px : blacked[0].px) CHECK(px == 0);

    std::vector<VisualMask> half(1);
    half[0].quantized = Image8(4, 4, 128);
    auto once = apply_mask(frames, half, cfg);
    auto twice = apply_mask(once, half, cfg);
    CHECK(twice[0].px[15] < once[0].px[15]);  // fractional masks attenuate again

    std::vector<VisualMask> wrong(1);
    wrong[0].quantized = Image8(3, 3, 255);
    CHECK_THROWS_AS(apply_mask(frames, wrong, cfg), std::invalid_argument);
}

TEST_CASE("mask config validation") {
    MaskConfig cfg;
    cfg.alpha = 1.5;
    CHECK_THROWS_AS(cfg.validate(), DataError);
    cfg = MaskConfig{};
    cfg.beta = 0.0;
    CHECK_THROWS_AS(cfg.validate(), DataError);
    cfg = MaskConfig{};
    cfg.kappa = 300;
    CHECK_THROWS_AS(cfg.validate(), DataError);
}
