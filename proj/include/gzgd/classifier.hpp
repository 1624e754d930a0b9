#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gzgd/adam.hpp"
#include "gzgd/autodiff.hpp"
#include "gzgd/checkpoint.hpp"

namespace gzgd {

struct ClassifierConfig {
    int se_reduction = 4;
    int kernel = 3;  // conv1d over time, padding keeps length
    int epochs = 50;
    double lr = 0.002;
    bool use_gaze = false;  // false = M1 baseline, true = M2
    double test_fraction = 0.2;
    std::uint64_t seed = 42;

    void validate(int channels) const {
        if (se_reduction < 1 || channels % se_reduction != 0)
            throw DataError("classifier: se_reduction must divide the channel count");
        if (!(lr > 0.0)) throw DataError("classifier: lr must be > 0");
        if (epochs < 1) throw DataError("classifier: epochs must be >= 1");
        if (!(test_fraction > 0.0 && test_fraction < 1.0))
            throw DataError("classifier: test_fraction must be in (0,1)");
    }
};

struct Prediction {
    std::string clip_id;
    double probs[2] = {0.0, 0.0};
    int pred = 0;
    int label = 0;

    double confidence() const { return probs[pred]; }
    bool correct() const { return pred == label; }
};

// One attention path: biasless 1-D convolution over time followed by
// squeeze-and-excitation channel gating.
template <typename T>
struct SeBlock {
    NodeP<T> conv_w;          // {C,C,k}
    NodeP<T> fc1_w, fc1_b;    // {C/r, C}
    NodeP<T> fc2_w, fc2_b;    // {C, C/r}
    int kernel = 3;

    static SeBlock seeded(int channels, int reduction, int kernel, std::uint64_t seed) {
        Rng rng(seed);
        SeBlock b;
        b.kernel = kernel;
        const int mid = channels / reduction;
        b.conv_w = parameter(he_init<T>({channels, channels, kernel}, channels * kernel, rng));
        b.fc1_w = parameter(he_init<T>({mid, channels}, channels, rng));
        b.fc1_b = parameter(Tensor<T>({mid}, T(0)));
        b.fc2_w = parameter(he_init<T>({channels, mid}, mid, rng));
        b.fc2_b = parameter(Tensor<T>({channels}, T(0)));
        return b;
    }

    std::vector<NodeP<T>> parameters() const { return {conv_w, fc1_w, fc1_b, fc2_w, fc2_b}; }

    // X {C,L} -> gated U {C,L}
    NodeP<T> forward(NodeP<T> x) const {
        auto u = conv1d(x, conv_w, 1, (kernel - 1) / 2);
        auto squeeze = global_avg_pool(u);
        auto gate = sigmoid(dense(relu(dense(squeeze, fc1_w, fc1_b)), fc2_w, fc2_b));
        return scale_channels(u, gate);
    }
};

// gaze-guided fusion: element-wise product of the two attention outputs
template <typename T>
NodeP<T> fuse(NodeP<T> video_feats, NodeP<T> mask_feats) {
    return mul(video_feats, mask_feats);
}

template <typename T>
struct AttentionClassifier {
    ClassifierConfig cfg;
    int channels = 0;
    SeBlock<T> video_se;
    std::optional<SeBlock<T>> mask_se;
    NodeP<T> head_w, head_b;  // {2,C}, {2}

    // Component seeds are derived independently, so M1 and M2 built from the
    // same seed share identical video-path and head weights.
    static AttentionClassifier seeded(const ClassifierConfig& cfg, int channels) {
        cfg.validate(channels);
        AttentionClassifier c;
        c.cfg = cfg;
        c.channels = channels;
        c.video_se = SeBlock<T>::seeded(channels, cfg.se_reduction, cfg.kernel,
                                        derive_seed(cfg.seed, "cls-video"));
        if (cfg.use_gaze)
            c.mask_se = SeBlock<T>::seeded(channels, cfg.se_reduction, cfg.kernel,
                                           derive_seed(cfg.seed, "cls-mask"));
        Rng head_rng(derive_seed(cfg.seed, "cls-head"));
        c.head_w = parameter(he_init<T>({2, channels}, channels, head_rng));
        c.head_b = parameter(Tensor<T>({2}, T(0)));
        return c;
    }

    std::vector<NodeP<T>> parameters() const {
        std::vector<NodeP<T>> p = video_se.parameters();
        if (mask_se) {
            auto mp = mask_se->parameters();
            p.insert(p.end(), mp.begin(), mp.end());
        }
        p.push_back(head_w);
        p.push_back(head_b);
        return p;
    }

    NodeP<T> logits(NodeP<T> video_feats, NodeP<T> mask_feats) const {
        auto u = video_se.forward(video_feats);
        NodeP<T> fused;
        if (cfg.use_gaze) {
            if (!mask_feats)
                throw std::invalid_argument("classifier: use_gaze set but no mask features");
            fused = fuse(u, mask_se->forward(mask_feats));
        } else {
            fused = u;
        }
        return dense(global_avg_pool(fused), head_w, head_b);
    }

    Prediction classify(const Tensor<T>& video_feats, const Tensor<T>* mask_feats,
                        const std::string& clip_id = "", int label = 0) const {
        auto v = constant(video_feats);
        NodeP<T> m = mask_feats ? constant(*mask_feats) : nullptr;
        auto p = softmax(logits(v, m));
        Prediction pred;
        pred.clip_id = clip_id;
        pred.label = label;
        pred.probs[0] = static_cast<double>(p->value.data[0]);
        pred.probs[1] = static_cast<double>(p->value.data[1]);
        pred.pred = pred.probs[1] > pred.probs[0] ? 1 : 0;
        return pred;
    }
};

// Per-clip feature bundle consumed by training.
template <typename T>
struct ClipFeatures {
    std::string clip_id;
    int label = 0;
    Tensor<T> video;          // {C,L}
    Tensor<T> mask;           // {C,L}, may be empty when gaze is unused
};

struct SplitIndices {
    std::vector<std::size_t> train, test;
};

// Stratified split; both folds must contain both classes.
template <typename T>
SplitIndices stratified_split(const std::vector<ClipFeatures<T>>& clips, double test_fraction,
                              std::uint64_t seed) {
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < clips.size(); ++i) by_class[clips[i].label == 1].push_back(i);
    Rng rng(derive_seed(seed, "split"));
    SplitIndices split;
    for (auto& idx : by_class) {
        rng.shuffle(idx.begin(), idx.end());
        const std::size_t n_test =
            std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(
                                         static_cast<double>(idx.size()) * test_fraction)));
        for (std::size_t i = 0; i < idx.size(); ++i)
            (i < n_test ? split.test : split.train).push_back(idx[i]);
    }
    auto has_both = [&](const std::vector<std::size_t>& fold) {
        bool c0 = false, c1 = false;
        for (auto i : fold) (clips[i].label == 1 ? c1 : c0) = true;
        return c0 && c1;
    };
    if (!has_both(split.train) || !has_both(split.test))
        throw DataError("classifier: a split ended up with a single class");
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

struct ClsTrainResult {
    std::vector<double> loss_curve;          // mean cross-entropy per epoch
    std::vector<Prediction> test_predictions;  // ordered by clip_id
};

template <typename T>
ClsTrainResult train_classifier(AttentionClassifier<T>& model,
                                const std::vector<ClipFeatures<T>>& clips) {
    if (clips.empty()) throw DataError("train_classifier: empty dataset");
    const auto& cfg = model.cfg;
    const SplitIndices split = stratified_split(clips, cfg.test_fraction, cfg.seed);

    Rng shuffle_rng(derive_seed(cfg.seed, "cls-shuffle"));
    Adam<T> opt(model.parameters(), cfg.lr);
    std::vector<std::size_t> order = split.train;

    ClsTrainResult res;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order.begin(), order.end());
        double epoch_loss = 0.0;
        for (std::size_t i : order) {
            const auto& clip = clips[i];
            auto v = constant(clip.video);
            NodeP<T> m;
            if (cfg.use_gaze) {
                if (clip.mask.numel() == 0)
                    throw DataError("train_classifier: use_gaze set but clip '" + clip.clip_id +
                                    "' has no mask features");
                m = constant(clip.mask);
            }
            auto loss = softmax_cross_entropy(model.logits(v, m), clip.label);
            const double lv = static_cast<double>(loss->value.data[0]);
            if (!std::isfinite(lv))
                throw NumericError("train_classifier: non-finite loss at epoch " +
                                   std::to_string(epoch) + ", clip " + clip.clip_id);
            backward(loss);
            opt.step();
            opt.zero_grad();
            epoch_loss += lv;
        }
        res.loss_curve.push_back(epoch_loss / static_cast<double>(order.size()));
    }

    for (std::size_t i : split.test) {
        const auto& clip = clips[i];
        const Tensor<T>* m = cfg.use_gaze ? &clip.mask : nullptr;
        res.test_predictions.push_back(model.classify(clip.video, m, clip.clip_id, clip.label));
    }
    std::sort(res.test_predictions.begin(), res.test_predictions.end(),
              [](const Prediction& a, const Prediction& b) { return a.clip_id < b.clip_id; });
    return res;
}

// ---- predictions csv ----

inline void write_predictions_csv(const std::string& path, const std::vector<Prediction>& preds) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot write predictions: " + path);
    f << "clip_id,true,pred,p0,p1\n";
    char buf[128];
    for (const auto& p : preds) {
        std::snprintf(buf, sizeof(buf), "%s,%d,%d,%.17g,%.17g\n", p.clip_id.c_str(), p.label,
                      p.pred, p.probs[0], p.probs[1]);
        f << buf;
    }
}

inline std::vector<Prediction> read_predictions_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open predictions: " + path);
    std::string line;
    if (!std::getline(f, line)) throw DataError("predictions csv empty: " + path);
    std::vector<Prediction> preds;
    int line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        std::istringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 5)
            throw DataError("predictions csv line " + std::to_string(line_no) + ": expected 5 fields");
        Prediction p;
        p.clip_id = fields[0];
        p.label = std::stoi(fields[1]);
        p.pred = std::stoi(fields[2]);
        p.probs[0] = std::stod(fields[3]);
        p.probs[1] = std::stod(fields[4]);
        if ((p.label != 0 && p.label != 1) || (p.pred != 0 && p.pred != 1))
            throw DataError("predictions csv line " + std::to_string(line_no) + ": labels must be 0/1");
        preds.push_back(std::move(p));
    }
    if (preds.empty()) throw DataError("predictions csv has no rows: " + path);
    return preds;
}

// ---- checkpoint plumbing ----

template <typename T>
Checkpoint classifier_to_checkpoint(const AttentionClassifier<T>& model) {
    Checkpoint ckpt;
    const std::vector<double> meta = {static_cast<double>(model.channels),
                                      static_cast<double>(model.cfg.se_reduction),
                                      static_cast<double>(model.cfg.kernel),
                                      model.cfg.use_gaze ? 1.0 : 0.0};
    ckpt.entries.push_back(CheckpointEntry::make("meta", {4}, meta.data(), meta.size()));
    auto push_se = [&](const std::string& prefix, const SeBlock<T>& se) {
        ckpt_put(ckpt, prefix + ".conv.w", se.conv_w->value);
        ckpt_put(ckpt, prefix + ".fc1.w", se.fc1_w->value);
        ckpt_put(ckpt, prefix + ".fc1.b", se.fc1_b->value);
        ckpt_put(ckpt, prefix + ".fc2.w", se.fc2_w->value);
        ckpt_put(ckpt, prefix + ".fc2.b", se.fc2_b->value);
    };
    push_se("video", model.video_se);
    if (model.mask_se) push_se("mask", *model.mask_se);
    ckpt_put(ckpt, "head.w", model.head_w->value);
    ckpt_put(ckpt, "head.b", model.head_b->value);
    return ckpt;
}

template <typename T>
AttentionClassifier<T> classifier_from_checkpoint(const Checkpoint& ckpt) {
    const auto meta = ckpt_get<double>(ckpt, "meta");
    if (meta.numel() != 4) throw DataError("classifier checkpoint: bad meta entry");
    ClassifierConfig cfg;
    const int channels = static_cast<int>(meta.data[0]);
    cfg.se_reduction = static_cast<int>(meta.data[1]);
    cfg.kernel = static_cast<int>(meta.data[2]);
    cfg.use_gaze = meta.data[3] != 0.0;
    AttentionClassifier<T> model = AttentionClassifier<T>::seeded(cfg, channels);
    auto pull_se = [&](const std::string& prefix, SeBlock<T>& se) {
        se.conv_w->value = ckpt_get<T>(ckpt, prefix + ".conv.w");
        se.fc1_w->value = ckpt_get<T>(ckpt, prefix + ".fc1.w");
        se.fc1_b->value = ckpt_get<T>(ckpt, prefix + ".fc1.b");
        se.fc2_w->value = ckpt_get<T>(ckpt, prefix + ".fc2.w");
        se.fc2_b->value = ckpt_get<T>(ckpt, prefix + ".fc2.b");
    };
    pull_se("video", model.video_se);
    if (cfg.use_gaze) pull_se("mask", *model.mask_se);
    model.head_w->value = ckpt_get<T>(ckpt, "head.w");
    model.head_b->value = ckpt_get<T>(ckpt, "head.b");
    return model;
}

}  // namespace gzgd
