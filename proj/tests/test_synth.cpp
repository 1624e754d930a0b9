#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "gzgd/pipeline.hpp"
#include "gzgd/synth.hpp"
#include "helpers.hpp"

using namespace gzgd;

namespace {

// |horizontal gradient| - |vertical gradient| summed over a region; positive
// for vertical stripes. The scripted oracle behind the discriminability
// property.
double grad_stat(const Image8& img, int y0, int y1, int x0, int x1) {
    double gx = 0.0, gy = 0.0;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1 - 1; ++x)
            gx += std::fabs(static_cast<double>(img.at(y, x + 1)) - img.at(y, x));
    for (int y = y0; y < y1 - 1; ++y)
        for (int x = x0; x < x1; ++x)
            gy += std::fabs(static_cast<double>(img.at(y + 1, x)) - img.at(y, x));
    return gx - gy;
}

}  // namespace

TEST_CASE("same seed gives byte-identical datasets") {
    testutil::TempDir tmp("synt");
    SynthConfig cfg;
    cfg.clips = 6;
    cfg.frames = 5;
    cfg.seed = 123;
    synth_generate(cfg, tmp.path / "a");
    synth_generate(cfg, tmp.path / "b");
    for (const auto& row : read_labels(tmp.path / "a")) {
        for (int t = 0; t < cfg.frames; ++t) {
            auto fa = read_pgm((tmp.path / "a" / row.clip_id / frame_name(t)).string());
            auto fb = read_pgm((tmp.path / "b" / row.clip_id / frame_name(t)).string());
            REQUIRE(fa == fb);
        }
        std::ifstream ga(tmp.path / "a" / row.clip_id / "gaze.csv");
        std::ifstream gb(tmp.path / "b" / row.clip_id / "gaze.csv");
        std::stringstream sa, sb;
        sa << ga.rdbuf();
        sb << gb.rdbuf();
        REQUIRE(sa.str() == sb.str());
    }

    SynthConfig other = cfg;
    other.seed = 124;
    synth_generate(other, tmp.path / "c");
    auto fa = read_pgm((tmp.path / "a" / "clip_0000" / frame_name(0)).string());
    auto fc = read_pgm((tmp.path / "c" / "clip_0000" / frame_name(0)).string());
    CHECK(fa != fc);
}

TEST_CASE("exact stratification and clean gaze bounds") {
    testutil::TempDir tmp("synr");
    SynthConfig cfg;
    cfg.clips = 100;
    cfg.frames = 3;
    cfg.ratio = 0.5;
    synth_generate(cfg, tmp.path / "d");
    auto s = synth_describe(tmp.path / "d");
    CHECK(s.clips == 100);
    CHECK(s.positives == 50);
    CHECK(s.negatives == 50);

    for (const auto& row : read_labels(tmp.path / "d")) {
        GazeTrace gaze;
        Clip clip = load_clip(tmp.path / "d" / row.clip_id, &gaze);
        for (const auto& p : gaze.points) {
            if (!p.present) continue;
            CHECK(p.x >= 0.0);
            CHECK(p.x <= clip.w() - 1);
            CHECK(p.y >= 0.0);
            CHECK(p.y <= clip.h() - 1);
        }
    }
}

TEST_CASE("paper-ratio option approximates 325:129") {
    testutil::TempDir tmp("synp");
    SynthConfig cfg;
    cfg.clips = 50;
    cfg.frames = 2;
    cfg.ratio = 325.0 / 454.0;
    synth_generate(cfg, tmp.path / "e");
    auto s = synth_describe(tmp.path / "e");
    CHECK(s.positives == 36);  // lround(50 * 0.7159)
    CHECK(s.negatives == 14);
}

TEST_CASE("measured missing fraction tracks the configured rate") {
    testutil::TempDir tmp("synm");
    SynthConfig cfg;
    cfg.clips = 40;
    cfg.frames = 30;
    cfg.missing_rate = 0.1;
    synth_generate(cfg, tmp.path / "f");
    auto s = synth_describe(tmp.path / "f");
    // 1200 Bernoulli draws concentrate within +-0.03
    CHECK(std::fabs(s.missing_fraction - 0.1) < 0.03);
}

TEST_CASE("describe rejects an empty directory") {
    testutil::TempDir tmp("synx");
    fs::create_directories(tmp.path / "empty");
    CHECK_THROWS_AS(synth_describe(tmp.path / "empty"), DataError);
}

TEST_CASE("config validation") {
    SynthConfig cfg;
    cfg.clips = 1;
    CHECK_THROWS_AS(cfg.validate(), DataError);
    cfg = SynthConfig{};
    cfg.ratio = 0.0;
    CHECK_THROWS_AS(cfg.validate(), DataError);
    cfg = SynthConfig{};
    cfg.clips = 10;
    cfg.ratio = 0.01;  // rounds to zero positives
    CHECK_THROWS_AS(cfg.validate(), DataError);
    cfg = SynthConfig{};
    cfg.missing_rate = 1.0;
    CHECK_THROWS_AS(cfg.validate(), DataError);
}

TEST_CASE("discriminative cue lives only under the gaze") {
    testutil::TempDir tmp("synd");
    SynthConfig cfg;
    cfg.clips = 60;
    cfg.frames = 24;
    cfg.seed = 7;
    synth_generate(cfg, tmp.path / "g");

    int gaze_correct = 0, full_correct = 0, n = 0;
    for (const auto& row : read_labels(tmp.path / "g")) {
        GazeTrace gaze;
        Clip clip = load_clip(tmp.path / "g" / row.clip_id, &gaze);
        double s_gaze = 0.0, s_full = 0.0;
        for (int t = 0; t < clip.t(); ++t) {
            s_full += grad_stat(clip.frames[t], 0, clip.h(), 0, clip.w());
            const auto& p = gaze.points[t];
            if (!p.present) continue;
            const int cx = static_cast<int>(std::lround(p.x));
            const int cy = static_cast<int>(std::lround(p.y));
            const int r = 8;
            s_gaze += grad_stat(clip.frames[t], std::max(0, cy - r), std::min(clip.h(), cy + r),
                                std::max(0, cx - r), std::min(clip.w(), cx + r));
        }
        // vertical stripes (label 1) have dominant horizontal gradients
        gaze_correct += (s_gaze > 0.0) == (row.label == 1);
        full_correct += (s_full > 0.0) == (row.label == 1);
        ++n;
    }
    const double acc_gaze = static_cast<double>(gaze_correct) / n;
    const double acc_full = static_cast<double>(full_correct) / n;
    CHECK(acc_gaze > 0.95);
    CHECK(acc_full < 0.65);
}
