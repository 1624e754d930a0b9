#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gzgd/dataset.hpp"
#include "helpers.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(GZGD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("usage surface: help, version, unknown flags") {
    CHECK(run("--help") == 0);
    CHECK(run("synth --help") == 0);
    CHECK(run("--version") == 0);
    CHECK(run("definitely-not-a-subcommand") == 1);
    CHECK(run("synth --no-such-flag") == 1);
    CHECK(run("") == 1);  // missing subcommand
}

TEST_CASE("data errors exit with code 2") {
    testutil::TempDir tmp("clierr");
    CHECK(run("train-ae --data " + (tmp.path / "missing").string() + " --out " +
              (tmp.path / "x.gzgd").string()) == 2);
    CHECK(run("eval --preds " + (tmp.path / "nope.csv").string()) == 2);
    CHECK(run("mask --out " + (tmp.path / "m").string()) == 2);  // neither --clip nor --data
}

TEST_CASE("a diverging run exits with code 3") {
    testutil::TempDir tmp("clinf");
    const auto data = (tmp.path / "data").string();
    REQUIRE(run("synth --out " + data + " --clips 4 --frames 4 --size 32 32 --seed 1") == 0);
    REQUIRE(run("train-ae --data " + data + " --out " + (tmp.path / "ae.gzgd").string() +
                " --epochs 1 --latent 8 --seed 1") == 0);
    CHECK(run("train-cls --data " + data + " --ae " + (tmp.path / "ae.gzgd").string() + " --out " +
              (tmp.path / "cls.gzgd").string() + " --epochs 5 --lr 1e30 --seed 1") == 3);
}

TEST_CASE("full pipeline at desk scale, reproducible from the manifest") {
    testutil::TempDir tmp("clipipe");
    const auto data = (tmp.path / "data").string();
    const auto run_dir = tmp.path / "run";
    fs::create_directories(run_dir);

    // synth -> mask -> train-ae -> train-cls x2 -> eval x2 -> trust x2
    REQUIRE(run("synth --out " + data + " --clips 12 --frames 6 --size 32 32 --seed 5") == 0);
    REQUIRE(run("mask --data " + data + " --out " + (run_dir / "masks").string()) == 0);
    REQUIRE(run("train-ae --data " + data + " --out " + (run_dir / "ae.gzgd").string() +
                " --epochs 2 --batch 16 --latent 8 --seed 5") == 0);
    for (const std::string model : {"m1", "m2"}) {
        const std::string gaze = model == "m2" ? " --use-gaze" : "";
        REQUIRE(run("train-cls --data " + data + " --ae " + (run_dir / "ae.gzgd").string() +
                    " --out " + (run_dir / (model + ".gzgd")).string() + " --preds " +
                    (run_dir / (model + "_preds.csv")).string() + gaze +
                    " --epochs 2 --seed 5") == 0);
        REQUIRE(run("eval --preds " + (run_dir / (model + "_preds.csv")).string() + " --report " +
                    (run_dir / (model + "_report.json")).string() + " --plot " +
                    (run_dir / (model + "_roc.svg")).string() + " --plot-pr " +
                    (run_dir / (model + "_pr.svg")).string()) == 0);
        REQUIRE(run("trust --preds " + (run_dir / (model + "_preds.csv")).string() + " --report " +
                    (run_dir / (model + "_trust.json")).string() + " --density-csv " +
                    (run_dir / (model + "_density.csv")).string()) == 0);
    }

    // artifacts exist and parse
    for (const char* f : {"m1_report.json", "m2_report.json", "m1_trust.json", "m2_trust.json"}) {
        auto j = nlohmann::json::parse(slurp(run_dir / f));
        CHECK(j.is_object());
    }
    CHECK(slurp(run_dir / "m1_roc.svg").find("<svg") != std::string::npos);
    CHECK(fs::exists(run_dir / "m1_roc.svg.csv"));
    CHECK(fs::exists(run_dir / "masks" / "clip_0000" / "mask_00000.pgm"));
    CHECK(fs::exists(run_dir / "ae.gzgd.loss.csv"));

    SECTION("manifest pins the config and a re-run reproduces outputs bit-for-bit") {
        const auto manifest = nlohmann::json::parse(slurp(run_dir / "ae.gzgd.manifest.json"));
        CHECK(manifest["subcommand"] == "train-ae");
        CHECK(manifest["seed"] == 5);
        CHECK(manifest["config"]["epochs"] == 2);

        // replay train-ae from the manifest's resolved config into a new dir
        const auto run2 = tmp.path / "run2";
        fs::create_directories(run2);
        const auto& c = manifest["config"];
        REQUIRE(run("train-ae --data " + c["data"].get<std::string>() + " --out " +
                    (run2 / "ae.gzgd").string() + " --epochs " +
                    std::to_string(c["epochs"].get<int>()) + " --batch " +
                    std::to_string(c["batch"].get<int>()) + " --lr " +
                    std::to_string(c["lr"].get<double>()) + " --latent " +
                    std::to_string(c["latent"].get<int>()) + " --seed " +
                    std::to_string(manifest["seed"].get<std::uint64_t>())) == 0);
        CHECK(slurp(run2 / "ae.gzgd") == slurp(run_dir / "ae.gzgd"));
        const auto m2j = nlohmann::json::parse(slurp(run2 / "ae.gzgd.manifest.json"));
        CHECK(m2j["outputs"][(run2 / "ae.gzgd").string()] ==
              manifest["outputs"][(run_dir / "ae.gzgd").string()]);
    }

    SECTION("GZGD_SEED env var acts as the seed fallback") {
        const auto env_dir = (tmp.path / "env_data").string();
        const std::string cmd = std::string("GZGD_SEED=5 ") + GZGD_CLI_PATH + " synth --out " +
                                env_dir + " --clips 12 --frames 6 --size 32 32 >/dev/null 2>&1";
        REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
        CHECK(slurp(fs::path(env_dir) / "clip_0000" / "frame_00000.pgm") ==
              slurp(fs::path(data) / "clip_0000" / "frame_00000.pgm"));
    }
}

TEST_CASE("single-clip mask subcommand honors paper-faithful flags") {
    testutil::TempDir tmp("climask");
    const auto data = (tmp.path / "data").string();
    REQUIRE(run("synth --out " + data + " --clips 2 --frames 4 --size 32 32 --seed 8") == 0);
    const auto clip = data + "/clip_0000";
    REQUIRE(run("mask --clip " + clip + " --out " + (tmp.path / "m1").string() +
                " --alpha 0.6 --beta 0.3 --sigma 1.5 --mode combined --no-interp") == 0);
    // combined mode replicates one mask per frame
    auto a = slurp(tmp.path / "m1" / "mask_00000.pgm");
    auto b = slurp(tmp.path / "m1" / "mask_00003.pgm");
    CHECK(a == b);
    CHECK(run("mask --clip " + clip + " --out " + (tmp.path / "m2").string() +
              " --mode sideways") == 1);  // bad mode is a usage error
}
