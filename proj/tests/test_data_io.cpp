#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "gzgd/checkpoint.hpp"
#include "gzgd/dataset.hpp"
#include "gzgd/gaze.hpp"
#include "helpers.hpp"

using namespace gzgd;

TEST_CASE("parse_gaze_csv fills absent frames as missing") {
    auto trace = parse_gaze_csv(std::string("frame,x,y\n0,3.0,4.0\n"), 2);
    REQUIRE(trace.frames() == 2);
    CHECK(trace.points[0].present);
    CHECK(trace.points[0].x == 3.0);
    CHECK(trace.points[0].y == 4.0);
    CHECK_FALSE(trace.points[1].present);
}

TEST_CASE("parse_gaze_csv treats empty fields as missing") {
    auto trace = parse_gaze_csv(std::string("frame,x,y\n0,,\n"), 1);
    REQUIRE(trace.frames() == 1);
    CHECK_FALSE(trace.points[0].present);
}

TEST_CASE("parse_gaze_csv rejects malformed input") {
    CHECK_THROWS_AS(parse_gaze_csv(std::string("frame,x,y\n0,1,1\n0,2,2\n"), 2), DataError);
    CHECK_THROWS_AS(parse_gaze_csv(std::string("frame,x,y\n1,1,1\n0,2,2\n"), 2), DataError);
    CHECK_THROWS_AS(parse_gaze_csv(std::string("frame,x,y\n-1,1,1\n"), 2), DataError);
    CHECK_THROWS_AS(parse_gaze_csv(std::string("frame,x,y\nabc,1,1\n"), 2), DataError);
    CHECK_THROWS_AS(parse_gaze_csv(std::string("frame,x,y\n0,zz,1\n"), 2), DataError);
    CHECK_THROWS_AS(parse_gaze_csv(std::string("x,y\n"), 1), DataError);
    CHECK_THROWS_AS(parse_gaze_csv(std::string("frame,x,y\n5,1,1\n"), 2), DataError);
    // error message carries the line number
    try {
        parse_gaze_csv(std::string("frame,x,y\n0,1,1\n1,bad,1\n"), 3);
        FAIL("expected parse error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("gaze serialize/parse round-trip is the identity") {
    gzgd::Rng rng(11);
    for (int iter = 0; iter < 50; ++iter) {
        GazeTrace trace;
        const int n = 1 + static_cast<int>(rng.below(30));
        trace.points.resize(n);
        for (int i = 0; i < n; ++i) {
            trace.points[i].frame = i;
            if (rng.uniform() < 0.7) {
                trace.points[i].present = true;
                trace.points[i].x = rng.uniform(0.0, 64.0);
                trace.points[i].y = rng.uniform(0.0, 64.0);
            }
        }
        auto round = parse_gaze_csv(serialize_gaze_csv(trace), n);
        for (int i = 0; i < n; ++i) {
            CHECK(round.points[i].present == trace.points[i].present);
            if (trace.points[i].present) {
                CHECK(round.points[i].x == trace.points[i].x);
                CHECK(round.points[i].y == trace.points[i].y);
            }
        }
    }
}

TEST_CASE("interpolate_missing fills interior gaps linearly") {
    GazeTrace trace;
    trace.points = {{0, 0.0, 0.0, true}, {1, 0.0, 0.0, false}, {2, 2.0, 4.0, true}};
    auto out = interpolate_missing(trace);
    CHECK(out.points[1].present);
    CHECK(out.points[1].x == Catch::Approx(1.0));
    CHECK(out.points[1].y == Catch::Approx(2.0));
}

TEST_CASE("interpolate_missing extends edges by nearest sample") {
    GazeTrace trace;
    trace.points = {{0, 0.0, 0.0, false}, {1, 5.0, 5.0, true}};
    auto out = interpolate_missing(trace);
    CHECK(out.points[0].present);
    CHECK(out.points[0].x == 5.0);
    CHECK(out.points[0].y == 5.0);
}

TEST_CASE("interpolate_missing flags an all-missing trace") {
    GazeTrace trace;
    trace.points = {{0, 0.0, 0.0, false}, {1, 0.0, 0.0, false}};
    auto out = interpolate_missing(trace);
    CHECK(out.all_missing);
    CHECK_FALSE(out.points[0].present);
}

TEST_CASE("interpolate_missing is idempotent") {
    gzgd::Rng rng(7);
    for (int iter = 0; iter < 50; ++iter) {
        GazeTrace trace;
        const int n = 1 + static_cast<int>(rng.below(20));
        trace.points.resize(n);
        for (int i = 0; i < n; ++i) {
            trace.points[i].frame = i;
            if (rng.uniform() < 0.5) {
                trace.points[i].present = true;
                trace.points[i].x = rng.uniform(0.0, 32.0);
                trace.points[i].y = rng.uniform(0.0, 32.0);
            }
        }
        auto once = interpolate_missing(trace);
        auto twice = interpolate_missing(once);
        for (int i = 0; i < n; ++i) {
            CHECK(once.points[i].present == twice.points[i].present);
            CHECK(once.points[i].x == twice.points[i].x);
            CHECK(once.points[i].y == twice.points[i].y);
        }
    }
}

TEST_CASE("clamp_to_frame clamps off-screen samples to the border") {
    GazeTrace trace;
    trace.points = {{0, -3.0, 70.5, true}, {1, 10.0, 10.0, true}};
    clamp_to_frame(trace, 64, 64);
    CHECK(trace.points[0].x == 0.0);
    CHECK(trace.points[0].y == 63.0);
    CHECK(trace.points[1].x == 10.0);
}

TEST_CASE("pgm round-trip and maxval validation") {
    testutil::TempDir tmp("pgm");
    Image8 img(5, 7);
    for (size_t i = 0; i < img.px.size(); ++i) img.px[i] = static_cast<std::uint8_t>(i * 7 % 256);
    const auto path = (tmp.path / "a.pgm").string();
    write_pgm(path, img);
    CHECK(read_pgm(path) == img);

    const auto bad = (tmp.path / "bad.pgm").string();
    std::ofstream f(bad, std::ios::binary);
    f << "P5\n2 2\n128\n";
    f.write("aaaa", 4);
    f.close();
    CHECK_THROWS_AS(read_pgm(bad), DataError);
}

TEST_CASE("load_clip reads frames in order and validates shape") {
    testutil::TempDir tmp("clip");
    const auto dir = tmp.path / "clip_x";
    std::vector<Image8> frames;
    for (int i = 0; i < 10; ++i) {
        Image8 img(64, 64);
        img.px[0] = static_cast<std::uint8_t>(i);
        frames.push_back(img);
    }
    save_clip_frames(dir, frames);
    {
        std::ofstream f(dir / "gaze.csv");
        f << "frame,x,y\n0,1,1\n";
    }
    GazeTrace gaze;
    Clip clip = load_clip(dir, &gaze);
    CHECK(clip.t() == 10);
    CHECK(clip.h() == 64);
    CHECK(clip.w() == 64);
    CHECK(clip.frames[3].px[0] == 3);
    CHECK(gaze.frames() == 10);

    SECTION("frame gap is an error naming the index") {
        std::filesystem::remove(dir / frame_name(3));
        try {
            load_clip(dir);
            FAIL("expected gap error");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("3") != std::string::npos);
        }
    }
    SECTION("shape mismatch is an error") {
        write_pgm((dir / frame_name(3)).string(), Image8(32, 32));
        CHECK_THROWS_AS(load_clip(dir), DataError);
    }
}

TEST_CASE("checkpoint round-trip is bit-exact for both dtypes") {
    testutil::TempDir tmp("ckpt");
    gzgd::Rng rng(3);
    Checkpoint ckpt;
    std::vector<float> f32(60);
    for (auto& v : f32) v = static_cast<float>(rng.uniform(-10.0, 10.0));
    std::vector<double> f64(24);
    for (auto& v : f64) v = rng.uniform(-10.0, 10.0);
    ckpt.entries.push_back(CheckpointEntry::make("w1", {3, 4, 5}, f32.data(), f32.size()));
    ckpt.entries.push_back(CheckpointEntry::make("b/2", {24}, f64.data(), f64.size()));

    const auto path = (tmp.path / "m.gzgd").string();
    save_checkpoint(path, ckpt);
    Checkpoint back = load_checkpoint(path);
    REQUIRE(back.entries.size() == 2);
    CHECK(back.entries[0].name == "w1");
    CHECK(back.entries[0].shape == std::vector<int>{3, 4, 5});
    CHECK(back.entries[0].raw == ckpt.entries[0].raw);
    CHECK(back.entries[1].raw == ckpt.entries[1].raw);
    CHECK(back.find("b/2").values<double>() == f64);
    CHECK_THROWS_AS(back.find("nope"), DataError);
    CHECK_THROWS_AS(back.entries[0].values<double>(), DataError);  // dtype mismatch
}

TEST_CASE("checkpoint rejects unknown version and bad magic") {
    testutil::TempDir tmp("ckptv");
    const auto path = (tmp.path / "m.gzgd").string();
    {
        std::ofstream f(path, std::ios::binary);
        const std::uint32_t version = 99, count = 0;
        f << "GZGD";
        f.write(reinterpret_cast<const char*>(&version), 4);
        f.write(reinterpret_cast<const char*>(&count), 4);
    }
    CHECK_THROWS_AS(load_checkpoint(path), DataError);
    {
        std::ofstream f(path, std::ios::binary);
        f << "NOPE";
    }
    CHECK_THROWS_AS(load_checkpoint(path), DataError);
}
