#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gzgd/adam.hpp"
#include "gzgd/autodiff.hpp"
#include "gzgd/checkpoint.hpp"
#include "gzgd/common.hpp"
#include "gzgd/image.hpp"

namespace gzgd {

struct AEConfig {
    int latent_dim = 64;
    std::vector<int> channels = {8, 16, 32};  // stride-2 conv plan, input is 1 channel
    int epochs = 30;                          // paper setting: 100
    int batch = 32;                           // paper setting: 128
    double lr = 0.001;
    double dropout = 0.5;   // applied to the latent during training only
    int perceptual_layer = 2;
    std::uint64_t seed = 42;

    void validate() const {
        if (latent_dim < 1) throw DataError("ae: latent_dim must be >= 1");
        if (!(lr > 0.0)) throw DataError("ae: lr must be > 0");
        if (channels.empty()) throw DataError("ae: empty channel plan");
        if (epochs < 1 || batch < 1) throw DataError("ae: epochs and batch must be >= 1");
    }
};

namespace aedet {

template <typename T>
struct Conv {
    NodeP<T> w, b;
};

template <typename T>
Conv<T> make_conv(int out_ch, int in_ch, int k, Rng& rng, bool frozen) {
    Conv<T> c;
    Tensor<T> wt = he_init<T>({out_ch, in_ch, k, k}, in_ch * k * k, rng);
    Tensor<T> bt({out_ch}, T(0));
    if (frozen) {
        c.w = constant(std::move(wt));
        c.b = constant(std::move(bt));
    } else {
        c.w = parameter(std::move(wt));
        c.b = parameter(std::move(bt));
    }
    return c;
}

}  // namespace aedet

// Small frozen conv net for the feature-space loss term. Its random weights
// never train; features from layer j stand in for a pretrained backbone.
template <typename T>
struct PerceptualNet {
    std::vector<aedet::Conv<T>> convs;

    static PerceptualNet seeded(std::uint64_t seed, const std::vector<int>& channels = {8, 16, 32}) {
        PerceptualNet net;
        Rng rng(seed);
        int in_ch = 1;
        for (int ch : channels) {
            net.convs.push_back(aedet::make_conv<T>(ch, in_ch, 3, rng, /*frozen=*/true));
            in_ch = ch;
        }
        return net;
    }

    int layers() const { return static_cast<int>(convs.size()); }

    // activations after conv block j (1-based)
    NodeP<T> features(NodeP<T> x, int j) const {
        if (j < 1 || j > layers())
            throw std::invalid_argument("perceptual net: layer index out of range");
        NodeP<T> h = x;
        for (int i = 0; i < j; ++i) h = relu(conv2d(h, convs[i].w, convs[i].b, 2, 1));
        return h;
    }
};

// ||phi_j(x) - phi_j(x')||^2 / (C_j*H_j*W_j), averaged over the batch.
template <typename T>
NodeP<T> perceptual_loss(NodeP<T> x, NodeP<T> recon, const PerceptualNet<T>& phi, int j) {
    auto fx = phi.features(x, j);
    auto fr = phi.features(recon, j);
    const auto& s = fx->value.shape;  // {N,C,H,W}
    auto d = sub(fr, fx);
    return scale(sum(mul(d, d)),
                 static_cast<T>(1.0 / (static_cast<double>(s[0]) * s[1] * s[2] * s[3])));
}

// L_AE = L_MSE + L_p with unit weights.
template <typename T>
NodeP<T> ae_total_loss(NodeP<T> x, NodeP<T> recon, const PerceptualNet<T>& phi, int j) {
    return add(mse_loss(recon, x), perceptual_loss(x, recon, phi, j));
}

// Encoder: stride-2 3x3 conv blocks with ReLU, then a dense map to the
// latent. Decoder mirrors it with nearest-neighbour upsampling, final
// sigmoid keeps reconstructions in (0,1).
template <typename T>
struct Autoencoder {
    AEConfig cfg;
    int in_h = 0, in_w = 0;
    int feat_h = 0, feat_w = 0;  // encoder output spatial size
    std::vector<aedet::Conv<T>> enc_convs;
    NodeP<T> enc_w, enc_b;  // {latent, flat}
    NodeP<T> dec_w, dec_b;  // {flat, latent}
    std::vector<aedet::Conv<T>> dec_convs;
    PerceptualNet<T> phi;

    static Autoencoder seeded(const AEConfig& cfg, int h, int w) {
        cfg.validate();
        const int down = 1 << static_cast<int>(cfg.channels.size());
        if (h % down != 0 || w % down != 0)
            throw DataError("ae: input size must be divisible by " + std::to_string(down));
        Autoencoder ae;
        ae.cfg = cfg;
        ae.in_h = h;
        ae.in_w = w;
        ae.feat_h = h / down;
        ae.feat_w = w / down;

        Rng init(derive_seed(cfg.seed, "ae-init"));
        int in_ch = 1;
        for (int ch : cfg.channels) {
            ae.enc_convs.push_back(aedet::make_conv<T>(ch, in_ch, 3, init, false));
            in_ch = ch;
        }
        const int flat = ae.flat_dim();
        ae.enc_w = parameter(he_init<T>({cfg.latent_dim, flat}, flat, init));
        ae.enc_b = parameter(Tensor<T>({cfg.latent_dim}, T(0)));
        ae.dec_w = parameter(he_init<T>({flat, cfg.latent_dim}, cfg.latent_dim, init));
        ae.dec_b = parameter(Tensor<T>({flat}, T(0)));
        for (int i = static_cast<int>(cfg.channels.size()) - 1; i >= 0; --i) {
            const int out_ch = i == 0 ? 1 : cfg.channels[i - 1];
            ae.dec_convs.push_back(aedet::make_conv<T>(out_ch, cfg.channels[i], 3, init, false));
        }
        ae.phi = PerceptualNet<T>::seeded(derive_seed(cfg.seed, "phi"));
        return ae;
    }

    int flat_dim() const { return cfg.channels.back() * feat_h * feat_w; }

    std::vector<NodeP<T>> parameters() const {
        std::vector<NodeP<T>> p;
        for (const auto& c : enc_convs) {
            p.push_back(c.w);
            p.push_back(c.b);
        }
        p.push_back(enc_w);
        p.push_back(enc_b);
        p.push_back(dec_w);
        p.push_back(dec_b);
        for (const auto& c : dec_convs) {
            p.push_back(c.w);
            p.push_back(c.b);
        }
        return p;
    }

    // x: {N,1,H,W} -> {N,latent}
    NodeP<T> encode(NodeP<T> x) const {
        NodeP<T> h = x;
        for (const auto& c : enc_convs) h = relu(conv2d(h, c.w, c.b, 2, 1));
        h = reshape(h, {x->value.dim(0), flat_dim()});
        return dense(h, enc_w, enc_b);
    }

    // z: {N,latent} -> {N,1,H,W}
    NodeP<T> decode(NodeP<T> z) const {
        NodeP<T> h = dense(z, dec_w, dec_b);
        h = reshape(h, {z->value.dim(0), cfg.channels.back(), feat_h, feat_w});
        for (std::size_t i = 0; i < dec_convs.size(); ++i) {
            h = conv2d(upsample2x(h), dec_convs[i].w, dec_convs[i].b, 1, 1);
            h = i + 1 < dec_convs.size() ? relu(h) : sigmoid(h);
        }
        return h;
    }

    NodeP<T> reconstruct(NodeP<T> x, bool training, Rng* dropout_rng) const {
        NodeP<T> z = encode(x);
        if (training && dropout_rng) z = dropout(z, cfg.dropout, true, *dropout_rng);
        return decode(z);
    }
};

// Frames normalized to [0,1]; masks go through the same path.
template <typename T>
Tensor<T> frames_to_tensor(const std::vector<const Image8*>& frames) {
    if (frames.empty()) throw std::invalid_argument("frames_to_tensor: empty batch");
    const int h = frames[0]->h, w = frames[0]->w;
    Tensor<T> t({static_cast<int>(frames.size()), 1, h, w});
    std::size_t k = 0;
    for (const auto* f : frames) {
        if (f->h != h || f->w != w) throw std::invalid_argument("frames_to_tensor: shape mismatch");
        for (std::uint8_t px : f->px) t.data[k++] = static_cast<T>(px) / T(255);
    }
    return t;
}

// Per-frame latent vectors stacked channels x time for the attention stage.
template <typename T>
Tensor<T> encode_frames(const Autoencoder<T>& ae, const std::vector<Image8>& frames) {
    if (frames.empty()) throw std::invalid_argument("encode_frames: no frames");
    std::vector<const Image8*> ptrs;
    ptrs.reserve(frames.size());
    for (const auto& f : frames) ptrs.push_back(&f);
    auto x = constant(frames_to_tensor<T>(ptrs));
    auto z = ae.encode(x);  // {T, latent}
    const int t = static_cast<int>(frames.size());
    const int c = ae.cfg.latent_dim;
    Tensor<T> out({c, t});
    for (int i = 0; i < t; ++i)
        for (int j = 0; j < c; ++j)
            out.data[static_cast<std::size_t>(j) * t + i] =
                z->value.data[static_cast<std::size_t>(i) * c + j];
    return out;
}

struct AETrainResult {
    std::vector<double> loss_curve;  // mean L_AE per epoch
    bool all_missing = false;
};

// Frames of all clips are treated as independent samples.
template <typename T>
AETrainResult train_autoencoder(Autoencoder<T>& ae, const std::vector<Image8>& frames) {
    if (frames.empty()) throw DataError("train_autoencoder: empty dataset");
    const auto& cfg = ae.cfg;
    Rng shuffle_rng(derive_seed(cfg.seed, "ae-shuffle"));
    Rng dropout_rng(derive_seed(cfg.seed, "ae-dropout"));
    Adam<T> opt(ae.parameters(), cfg.lr);

    std::vector<std::size_t> idx(frames.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;

    AETrainResult result;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(idx.begin(), idx.end());
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < idx.size(); start += cfg.batch) {
            const std::size_t end = std::min(idx.size(), start + cfg.batch);
            std::vector<const Image8*> batch;
            batch.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) batch.push_back(&frames[idx[i]]);
            auto x = constant(frames_to_tensor<T>(batch));
            auto recon = ae.reconstruct(x, /*training=*/true, &dropout_rng);
            auto loss = ae_total_loss(x, recon, ae.phi, cfg.perceptual_layer);
            const double lv = static_cast<double>(loss->value.data[0]);
            if (!std::isfinite(lv))
                throw NumericError("train_autoencoder: non-finite loss at epoch " +
                                   std::to_string(epoch) + ", batch offset " + std::to_string(start));
            backward(loss);
            opt.step();
            opt.zero_grad();
            epoch_loss += lv * static_cast<double>(end - start);
            seen += end - start;
        }
        result.loss_curve.push_back(epoch_loss / static_cast<double>(seen));
    }
    return result;
}

// ---- checkpoint plumbing ----

template <typename T>
Checkpoint ae_to_checkpoint(const Autoencoder<T>& ae) {
    Checkpoint ckpt;
    const std::vector<double> meta = {
        static_cast<double>(ae.in_h),           static_cast<double>(ae.in_w),
        static_cast<double>(ae.cfg.latent_dim), static_cast<double>(ae.cfg.perceptual_layer),
        static_cast<double>(ae.cfg.channels.size())};
    std::vector<double> meta_full = meta;
    for (int ch : ae.cfg.channels) meta_full.push_back(static_cast<double>(ch));
    ckpt.entries.push_back(CheckpointEntry::make(
        "meta", {static_cast<int>(meta_full.size())}, meta_full.data(), meta_full.size()));
    for (std::size_t i = 0; i < ae.enc_convs.size(); ++i) {
        ckpt_put(ckpt, "enc.conv" + std::to_string(i) + ".w", ae.enc_convs[i].w->value);
        ckpt_put(ckpt, "enc.conv" + std::to_string(i) + ".b", ae.enc_convs[i].b->value);
    }
    ckpt_put(ckpt, "enc.dense.w", ae.enc_w->value);
    ckpt_put(ckpt, "enc.dense.b", ae.enc_b->value);
    ckpt_put(ckpt, "dec.dense.w", ae.dec_w->value);
    ckpt_put(ckpt, "dec.dense.b", ae.dec_b->value);
    for (std::size_t i = 0; i < ae.dec_convs.size(); ++i) {
        ckpt_put(ckpt, "dec.conv" + std::to_string(i) + ".w", ae.dec_convs[i].w->value);
        ckpt_put(ckpt, "dec.conv" + std::to_string(i) + ".b", ae.dec_convs[i].b->value);
    }
    for (std::size_t i = 0; i < ae.phi.convs.size(); ++i) {
        ckpt_put(ckpt, "phi.conv" + std::to_string(i) + ".w", ae.phi.convs[i].w->value);
        ckpt_put(ckpt, "phi.conv" + std::to_string(i) + ".b", ae.phi.convs[i].b->value);
    }
    return ckpt;
}

template <typename T>
Autoencoder<T> ae_from_checkpoint(const Checkpoint& ckpt) {
    const auto meta = ckpt_get<double>(ckpt, "meta");
    if (meta.numel() < 5) throw DataError("ae checkpoint: bad meta entry");
    AEConfig cfg;
    const int h = static_cast<int>(meta.data[0]);
    const int w = static_cast<int>(meta.data[1]);
    cfg.latent_dim = static_cast<int>(meta.data[2]);
    cfg.perceptual_layer = static_cast<int>(meta.data[3]);
    const int n_ch = static_cast<int>(meta.data[4]);
    if (static_cast<int>(meta.numel()) != 5 + n_ch) throw DataError("ae checkpoint: bad meta length");
    cfg.channels.clear();
    for (int i = 0; i < n_ch; ++i) cfg.channels.push_back(static_cast<int>(meta.data[5 + i]));

    Autoencoder<T> ae = Autoencoder<T>::seeded(cfg, h, w);
    for (std::size_t i = 0; i < ae.enc_convs.size(); ++i) {
        ae.enc_convs[i].w->value = ckpt_get<T>(ckpt, "enc.conv" + std::to_string(i) + ".w");
        ae.enc_convs[i].b->value = ckpt_get<T>(ckpt, "enc.conv" + std::to_string(i) + ".b");
    }
    ae.enc_w->value = ckpt_get<T>(ckpt, "enc.dense.w");
    ae.enc_b->value = ckpt_get<T>(ckpt, "enc.dense.b");
    ae.dec_w->value = ckpt_get<T>(ckpt, "dec.dense.w");
    ae.dec_b->value = ckpt_get<T>(ckpt, "dec.dense.b");
    for (std::size_t i = 0; i < ae.dec_convs.size(); ++i) {
        ae.dec_convs[i].w->value = ckpt_get<T>(ckpt, "dec.conv" + std::to_string(i) + ".w");
        ae.dec_convs[i].b->value = ckpt_get<T>(ckpt, "dec.conv" + std::to_string(i) + ".b");
    }
    for (std::size_t i = 0; i < ae.phi.convs.size(); ++i) {
        ae.phi.convs[i].w->value = ckpt_get<T>(ckpt, "phi.conv" + std::to_string(i) + ".w");
        ae.phi.convs[i].b->value = ckpt_get<T>(ckpt, "phi.conv" + std::to_string(i) + ".b");
    }
    return ae;
}

}  // namespace gzgd
