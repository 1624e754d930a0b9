#pragma once

#include <string>
#include <vector>

#include "gzgd/autoencoder.hpp"
#include "gzgd/classifier.hpp"
#include "gzgd/dataset.hpp"
#include "gzgd/mask.hpp"
#include "gzgd/synth.hpp"

namespace gzgd {

struct LoadedClip {
    Clip clip;
    GazeTrace gaze;
};

inline std::vector<LoadedClip> load_dataset(const fs::path& root) {
    const auto rows = read_labels(root);
    std::vector<LoadedClip> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        LoadedClip lc;
        lc.clip = load_clip(root / row.clip_id, &lc.gaze);
        lc.clip.label = row.label;
        out.push_back(std::move(lc));
    }
    return out;
}

inline std::vector<Image8> collect_frames(const std::vector<LoadedClip>& clips) {
    std::vector<Image8> frames;
    for (const auto& lc : clips)
        for (const auto& f : lc.clip.frames) frames.push_back(f);
    return frames;
}

inline std::vector<Image8> mask_images(const std::vector<VisualMask>& masks) {
    std::vector<Image8> out;
    out.reserve(masks.size());
    for (const auto& m : masks) out.push_back(m.quantized);
    return out;
}

// Encodes video frames and, when wanted, freshly built visual masks through
// the same frozen encoder.
template <typename T>
std::vector<ClipFeatures<T>> build_features(const Autoencoder<T>& ae,
                                            const std::vector<LoadedClip>& clips,
                                            const MaskConfig& mask_cfg, bool with_masks) {
    std::vector<ClipFeatures<T>> out;
    out.reserve(clips.size());
    for (const auto& lc : clips) {
        ClipFeatures<T> f;
        f.clip_id = lc.clip.clip_id;
        f.label = lc.clip.label;
        f.video = encode_frames(ae, lc.clip.frames);
        if (with_masks) {
            const auto masks = build_clip_masks(lc.gaze, mask_cfg, lc.clip.h(), lc.clip.w());
            f.mask = encode_frames(ae, mask_images(masks));
        }
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace gzgd
