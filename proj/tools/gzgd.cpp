// gzgd: gaze-guided video outcome classification pipeline.
// Subcommands: synth, mask, train-ae, train-cls, eval, trust.
// Exit codes: 0 ok, 1 usage error, 2 data error, 3 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gzgd/eval.hpp"
#include "gzgd/manifest.hpp"
#include "gzgd/pipeline.hpp"
#include "gzgd/svg.hpp"
#include "gzgd/trust.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::uint64_t resolve_seed(const CLI::App* cmd, std::uint64_t flag_value) {
    if (cmd->count("--seed") > 0) return flag_value;
    if (const char* env = std::getenv("GZGD_SEED")) return std::strtoull(env, nullptr, 10);
    return flag_value;
}

void write_loss_csv(const fs::path& path, const std::vector<double>& curve) {
    std::ofstream f(path);
    if (!f) throw gzgd::DataError("cannot write loss curve: " + path.string());
    f << "epoch,loss\n";
    char buf[64];
    for (std::size_t i = 0; i < curve.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, curve[i]);
        f << buf;
    }
}

gzgd::MaskMode parse_mode(const std::string& mode) {
    return mode == "combined" ? gzgd::MaskMode::combined : gzgd::MaskMode::per_frame;
}

int run_synth(const CLI::App* cmd, gzgd::SynthConfig cfg, const std::string& out) {
    cfg.seed = resolve_seed(cmd, cfg.seed);
    gzgd::synth_generate(cfg, out);

    gzgd::RunManifest m;
    m.subcommand = "synth";
    m.seed = cfg.seed;
    m.config = {{"out", out},           {"clips", cfg.clips},
                {"frames", cfg.frames}, {"height", cfg.height},
                {"width", cfg.width},   {"ratio", cfg.ratio},
                {"jitter", cfg.gaze_jitter}, {"missing", cfg.missing_rate},
                {"distractors", cfg.distractors}, {"noise", cfg.noise}};
    m.add_output(out);
    m.write(fs::path(out) / "manifest.json");

    const auto s = gzgd::synth_describe(out);
    std::cout << "wrote " << s.clips << " clips (" << s.positives << " successful, " << s.negatives
              << " unsuccessful), " << s.frames_per_clip << "x" << s.height << "x" << s.width
              << ", missing gaze fraction " << s.missing_fraction << "\n";
    return 0;
}

int run_mask(const CLI::App* /*cmd*/, const std::string& clip_dir, const std::string& data_root,
             const std::string& out, gzgd::MaskConfig cfg, const std::string& mode) {
    cfg.mode = parse_mode(mode);
    cfg.validate();

    gzgd::RunManifest m;
    m.subcommand = "mask";
    m.config = {{"clip", clip_dir},   {"data", data_root},       {"out", out},
                {"alpha", cfg.alpha}, {"beta", cfg.beta},        {"sigma", cfg.sigma},
                {"kappa", cfg.kappa}, {"mode", mode},            {"interpolate", cfg.interpolate}};

    auto mask_one = [&](const fs::path& dir, const fs::path& dest) {
        gzgd::GazeTrace gaze;
        const gzgd::Clip clip = gzgd::load_clip(dir, &gaze);
        const auto masks = gzgd::build_clip_masks(gaze, cfg, clip.h(), clip.w());
        gzgd::save_mask_sequence(dest, gzgd::mask_images(masks));
    };

    if (!clip_dir.empty()) {
        m.add_input(clip_dir);
        mask_one(clip_dir, out);
    } else {
        m.add_input(data_root);
        for (const auto& row : gzgd::read_labels(data_root))
            mask_one(fs::path(data_root) / row.clip_id, fs::path(out) / row.clip_id);
    }
    m.add_output(out);
    m.write(fs::path(out) / "manifest.json");
    std::cout << "masks written to " << out << "\n";
    return 0;
}

int run_train_ae(const CLI::App* cmd, const std::string& data, const std::string& out,
                 gzgd::AEConfig cfg) {
    cfg.seed = resolve_seed(cmd, cfg.seed);
    const auto clips = gzgd::load_dataset(data);
    const auto frames = gzgd::collect_frames(clips);
    if (frames.empty()) throw gzgd::DataError("train-ae: dataset has no frames");

    auto ae = gzgd::Autoencoder<float>::seeded(cfg, frames[0].h, frames[0].w);
    const auto result = gzgd::train_autoencoder(ae, frames);
    gzgd::save_checkpoint(out, gzgd::ae_to_checkpoint(ae));
    const fs::path loss_path = out + ".loss.csv";
    write_loss_csv(loss_path, result.loss_curve);

    gzgd::RunManifest m;
    m.subcommand = "train-ae";
    m.seed = cfg.seed;
    m.config = {{"data", data},   {"out", out},
                {"epochs", cfg.epochs}, {"batch", cfg.batch},
                {"lr", cfg.lr},   {"latent", cfg.latent_dim},
                {"dropout", cfg.dropout}, {"perceptual_layer", cfg.perceptual_layer}};
    m.add_input(data);
    m.add_output(out);
    m.add_output(loss_path);
    m.write(out + ".manifest.json");

    std::cout << "trained " << cfg.epochs << " epochs on " << frames.size() << " frames; loss "
              << result.loss_curve.front() << " -> " << result.loss_curve.back() << "\n";
    return 0;
}

int run_train_cls(const CLI::App* cmd, const std::string& data, const std::string& ae_path,
                  const std::string& out, std::string preds_path, gzgd::ClassifierConfig cfg) {
    cfg.seed = resolve_seed(cmd, cfg.seed);
    const auto clips = gzgd::load_dataset(data);
    const auto ae = gzgd::ae_from_checkpoint<float>(gzgd::load_checkpoint(ae_path));

    gzgd::MaskConfig mask_cfg;  // per-frame defaults mirror the mask subcommand
    const auto features = gzgd::build_features(ae, clips, mask_cfg, cfg.use_gaze);
    auto model = gzgd::AttentionClassifier<float>::seeded(cfg, ae.cfg.latent_dim);
    const auto result = gzgd::train_classifier(model, features);

    gzgd::save_checkpoint(out, gzgd::classifier_to_checkpoint(model));
    if (preds_path.empty()) preds_path = (fs::path(out).parent_path() / "preds.csv").string();
    gzgd::write_predictions_csv(preds_path, result.test_predictions);

    gzgd::RunManifest m;
    m.subcommand = "train-cls";
    m.seed = cfg.seed;
    m.config = {{"data", data}, {"ae", ae_path},       {"out", out},
                {"preds", preds_path}, {"use_gaze", cfg.use_gaze}, {"epochs", cfg.epochs},
                {"lr", cfg.lr}, {"se_reduction", cfg.se_reduction}};
    m.add_input(data);
    m.add_input(ae_path);
    m.add_output(out);
    m.add_output(preds_path);
    m.write(out + ".manifest.json");

    const auto counts = gzgd::confusion(result.test_predictions);
    std::cout << (cfg.use_gaze ? "M2 (with gaze)" : "M1 (without gaze)") << " test accuracy "
              << gzgd::accuracy(counts) << " on " << result.test_predictions.size()
              << " held-out clips; final loss " << result.loss_curve.back() << "\n";
    return 0;
}

int run_eval(const CLI::App* /*cmd*/, const std::string& preds_path, const std::string& report_path,
             const std::string& plot_roc, const std::string& plot_pr) {
    const auto preds = gzgd::read_predictions_csv(preds_path);
    const auto report = gzgd::evaluate(preds);
    {
        std::ofstream f(report_path);
        if (!f) throw gzgd::DataError("cannot write report: " + report_path);
        f << gzgd::eval_report_json(report).dump(2) << "\n";
    }
    if (!plot_roc.empty()) {
        gzgd::write_curve_svg(plot_roc, "ROC curve", "false positive rate", "true positive rate",
                              report.roc, /*diagonal=*/true);
        gzgd::write_curve_csv(plot_roc + ".csv", "fpr", "tpr", report.roc);
    }
    if (!plot_pr.empty()) {
        gzgd::write_curve_svg(plot_pr, "PR curve", "recall", "precision", report.pr);
        gzgd::write_curve_csv(plot_pr + ".csv", "recall", "precision", report.pr);
    }

    gzgd::RunManifest m;
    m.subcommand = "eval";
    m.config = {{"preds", preds_path},
                {"report", report_path},
                {"plot", plot_roc},
                {"plot_pr", plot_pr}};
    m.add_input(preds_path);
    m.add_output(report_path);
    if (!plot_roc.empty()) m.add_output(plot_roc);
    if (!plot_pr.empty()) m.add_output(plot_pr);
    m.write(report_path + ".manifest.json");

    std::cout << "accuracy " << report.accuracy << ", mcc " << report.mcc << ", f1 " << report.f1
              << ", specificity " << report.specificity << ", sensitivity " << report.sensitivity
              << ", roc_auc " << report.roc_auc << ", pr_auc " << report.pr_auc << "\n";
    return 0;
}

int run_trust(const CLI::App* /*cmd*/, const std::string& preds_path,
              const std::string& report_path, const std::string& density_csv, bool uniform_prior) {
    const auto preds = gzgd::read_predictions_csv(preds_path);
    gzgd::TrustConfig cfg;
    cfg.uniform_prior = uniform_prior;
    const auto report = gzgd::trust_report(preds, cfg);
    {
        std::ofstream f(report_path);
        if (!f) throw gzgd::DataError("cannot write report: " + report_path);
        f << gzgd::trust_report_json(report).dump(2) << "\n";
    }
    if (!density_csv.empty()) {
        std::ofstream f(density_csv);
        if (!f) throw gzgd::DataError("cannot write density csv: " + density_csv);
        f << "q,class0,class1\n";
        char buf[128];
        const int g = cfg.density_grid;
        for (int i = 0; i < g; ++i) {
            const double x = static_cast<double>(i) / (g - 1);
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", x,
                          report.per_class[0].density[i], report.per_class[1].density[i]);
            f << buf;
        }
    }

    gzgd::RunManifest m;
    m.subcommand = "trust";
    m.config = {{"preds", preds_path},
                {"report", report_path},
                {"density_csv", density_csv},
                {"uniform_prior", uniform_prior}};
    m.add_input(preds_path);
    m.add_output(report_path);
    if (!density_csv.empty()) m.add_output(density_csv);
    m.write(report_path + ".manifest.json");

    std::cout << "nts " << report.nts << " (class 0: " << report.per_class[0].qz_mean
              << ", class 1: " << report.per_class[1].qz_mean << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gaze-guided spatiotemporal attention pipeline"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("gzgd ") + gzgd::kVersion);

    // synth
    gzgd::SynthConfig synth_cfg;
    std::string synth_out;
    auto* synth = app.add_subcommand("synth", "generate a labeled synthetic dataset");
    synth->add_option("--out", synth_out, "output dataset directory")->required();
    synth->add_option("--clips", synth_cfg.clips, "number of clips");
    synth->add_option("--frames", synth_cfg.frames, "frames per clip");
    synth->add_option("--size", [&synth_cfg](const std::vector<std::string>& vals) {
        synth_cfg.height = std::stoi(vals.at(0));
        synth_cfg.width = std::stoi(vals.at(1));
        return true;
    }, "frame size: H W")->expected(2);
    synth->add_option("--ratio", synth_cfg.ratio, "fraction of successful clips");
    synth->add_option("--missing", synth_cfg.missing_rate, "missing-gaze rate");
    synth->add_option("--jitter", synth_cfg.gaze_jitter, "gaze jitter sigma in px");
    synth->add_option("--distractors", synth_cfg.distractors, "distractor patch count");
    synth->add_option("--noise", synth_cfg.noise, "background noise sigma");
    synth->add_option("--seed", synth_cfg.seed, "rng seed");

    // mask
    std::string mask_clip, mask_data, mask_out, mask_mode = "per-frame";
    gzgd::MaskConfig mask_cfg;
    bool mask_no_interp = false;
    auto* mask = app.add_subcommand("mask", "build visual masks from gaze traces");
    auto* clip_opt = mask->add_option("--clip", mask_clip, "single clip directory");
    mask->add_option("--data", mask_data, "dataset root (all clips)")->excludes(clip_opt);
    mask->add_option("--out", mask_out, "output directory")->required();
    mask->add_option("--alpha", mask_cfg.alpha, "decay rate");
    mask->add_option("--beta", mask_cfg.beta, "propagation floor");
    mask->add_option("--sigma", mask_cfg.sigma, "Gaussian sigma in px");
    mask->add_option("--kappa", mask_cfg.kappa, "quantization scale");
    mask->add_option("--mode", mask_mode, "per-frame or combined")
        ->check(CLI::IsMember({"per-frame", "combined"}));
    mask->add_flag("--no-interp", mask_no_interp, "skip temporal gaze interpolation");

    // train-ae
    std::string ae_data, ae_out;
    gzgd::AEConfig ae_cfg;
    auto* train_ae = app.add_subcommand("train-ae", "train the frame autoencoder");
    train_ae->add_option("--data", ae_data, "dataset root")->required();
    train_ae->add_option("--out", ae_out, "output checkpoint path")->required();
    train_ae->add_option("--epochs", ae_cfg.epochs, "training epochs");
    train_ae->add_option("--batch", ae_cfg.batch, "batch size");
    train_ae->add_option("--lr", ae_cfg.lr, "learning rate");
    train_ae->add_option("--latent", ae_cfg.latent_dim, "latent dimension");
    train_ae->add_option("--seed", ae_cfg.seed, "rng seed");

    // train-cls
    std::string cls_data, cls_ae, cls_out, cls_preds;
    gzgd::ClassifierConfig cls_cfg;
    auto* train_cls = app.add_subcommand("train-cls", "train the attention classifier");
    train_cls->add_option("--data", cls_data, "dataset root")->required();
    train_cls->add_option("--ae", cls_ae, "autoencoder checkpoint")->required();
    train_cls->add_option("--out", cls_out, "output checkpoint path")->required();
    train_cls->add_option("--preds", cls_preds, "predictions csv path (default: preds.csv next to --out)");
    train_cls->add_flag("--use-gaze", cls_cfg.use_gaze, "enable gaze fusion attention (M2)");
    train_cls->add_option("--epochs", cls_cfg.epochs, "training epochs");
    train_cls->add_option("--lr", cls_cfg.lr, "learning rate");
    train_cls->add_option("--seed", cls_cfg.seed, "rng seed");

    // eval
    std::string eval_preds, eval_report = "report.json", eval_plot, eval_plot_pr;
    auto* eval = app.add_subcommand("eval", "confusion metrics and ROC/PR curves");
    eval->add_option("--preds", eval_preds, "predictions csv")->required();
    eval->add_option("--report", eval_report, "output report json");
    eval->add_option("--plot", eval_plot, "ROC curve svg path");
    eval->add_option("--plot-pr", eval_plot_pr, "PR curve svg path");

    // trust
    std::string trust_preds, trust_report_path = "trust.json", trust_density_csv;
    bool trust_uniform = false;
    auto* trust = app.add_subcommand("trust", "trust spectrum and NetTrustScore");
    trust->add_option("--preds", trust_preds, "predictions csv")->required();
    trust->add_option("--report", trust_report_path, "output report json");
    trust->add_option("--density-csv", trust_density_csv, "trust density csv path");
    trust->add_flag("--uniform-prior", trust_uniform, "use uniform class priors in NTS");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) return run_synth(synth, synth_cfg, synth_out);
        if (mask->parsed()) {
            if (mask_clip.empty() && mask_data.empty())
                throw gzgd::DataError("mask: need --clip or --data");
            mask_cfg.interpolate = !mask_no_interp;
            return run_mask(mask, mask_clip, mask_data, mask_out, mask_cfg, mask_mode);
        }
        if (train_ae->parsed()) return run_train_ae(train_ae, ae_data, ae_out, ae_cfg);
        if (train_cls->parsed())
            return run_train_cls(train_cls, cls_data, cls_ae, cls_out, cls_preds, cls_cfg);
        if (eval->parsed()) return run_eval(eval, eval_preds, eval_report, eval_plot, eval_plot_pr);
        if (trust->parsed())
            return run_trust(trust, trust_preds, trust_report_path, trust_density_csv, trust_uniform);
    } catch (const gzgd::NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const gzgd::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
