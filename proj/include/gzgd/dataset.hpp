#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gzgd/gaze.hpp"
#include "gzgd/image.hpp"

namespace gzgd {

namespace fs = std::filesystem;

// T x H x W stack of 8-bit frames with the clip's outcome label.
struct Clip {
    std::string clip_id;
    std::vector<Image8> frames;
    int label = 0;  // 0 = unsuccessful, 1 = successful

    int t() const { return static_cast<int>(frames.size()); }
    int h() const { return frames.empty() ? 0 : frames[0].h; }
    int w() const { return frames.empty() ? 0 : frames[0].w; }
};

inline std::string frame_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%05d.pgm", index);
    return buf;
}

inline std::string mask_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "mask_%05d.pgm", index);
    return buf;
}

// Loads frame_%05d.pgm in index order plus gaze.csv. Frame indices must be
// gapless from 0; all frames must share one shape. Gaze coordinates are
// clamped to the frame border.
inline Clip load_clip(const fs::path& dir, GazeTrace* gaze_out = nullptr) {
    if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
    std::vector<int> indices;
    for (const auto& ent : fs::directory_iterator(dir)) {
        const std::string name = ent.path().filename().string();
        if (name.size() == 15 && name.rfind("frame_", 0) == 0 && name.ends_with(".pgm"))
            indices.push_back(std::stoi(name.substr(6, 5)));
    }
    if (indices.empty()) throw DataError("no frame_*.pgm files in " + dir.string());
    std::sort(indices.begin(), indices.end());
    for (int i = 0; i < static_cast<int>(indices.size()); ++i)
        if (indices[i] != i)
            throw DataError("frame index gap in " + dir.string() + ": missing frame " +
                            std::to_string(i));

    Clip clip;
    clip.clip_id = dir.filename().string();
    clip.frames.reserve(indices.size());
    for (int i = 0; i < static_cast<int>(indices.size()); ++i) {
        Image8 img = read_pgm((dir / frame_name(i)).string());
        if (!clip.frames.empty() && (img.h != clip.h() || img.w != clip.w()))
            throw DataError("frame shape mismatch at index " + std::to_string(i) + " in " +
                            dir.string());
        clip.frames.push_back(std::move(img));
    }

    if (gaze_out) {
        const fs::path gaze_path = dir / "gaze.csv";
        std::ifstream f(gaze_path);
        if (!f) throw DataError("missing gaze.csv in " + dir.string());
        *gaze_out = parse_gaze_csv(f, clip.t(), clip.clip_id);
        clamp_to_frame(*gaze_out, clip.h(), clip.w());
    }
    return clip;
}

inline void save_clip_frames(const fs::path& dir, const std::vector<Image8>& frames) {
    fs::create_directories(dir);
    for (int i = 0; i < static_cast<int>(frames.size()); ++i)
        write_pgm((dir / frame_name(i)).string(), frames[i]);
}

inline void save_mask_sequence(const fs::path& dir, const std::vector<Image8>& masks) {
    fs::create_directories(dir);
    for (int i = 0; i < static_cast<int>(masks.size()); ++i)
        write_pgm((dir / mask_name(i)).string(), masks[i]);
}

struct LabelRow {
    std::string clip_id;
    int label = 0;
};

inline std::vector<LabelRow> read_labels(const fs::path& root) {
    const fs::path path = root / "labels.csv";
    std::ifstream f(path);
    if (!f) throw DataError("missing labels.csv in " + root.string());
    std::string line;
    if (!std::getline(f, line)) throw DataError("labels.csv empty: " + path.string());
    auto header = detail::split_csv_line(line);
    if (header.size() != 2 || header[0] != "clip_id" || header[1] != "label")
        throw DataError("labels.csv: expected header 'clip_id,label'");
    std::vector<LabelRow> rows;
    int line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != 2)
            throw DataError("labels.csv line " + std::to_string(line_no) + ": expected 2 fields");
        if (fields[1] != "0" && fields[1] != "1")
            throw DataError("labels.csv line " + std::to_string(line_no) + ": label must be 0 or 1");
        rows.push_back({fields[0], fields[1] == "1" ? 1 : 0});
    }
    if (rows.empty()) throw DataError("labels.csv has no rows: " + path.string());
    std::sort(rows.begin(), rows.end(),
              [](const LabelRow& a, const LabelRow& b) { return a.clip_id < b.clip_id; });
    return rows;
}

inline void write_labels(const fs::path& root, const std::vector<LabelRow>& rows) {
    fs::create_directories(root);
    std::ofstream f(root / "labels.csv");
    if (!f) throw DataError("cannot write labels.csv in " + root.string());
    f << "clip_id,label\n";
    for (const auto& r : rows) f << r.clip_id << "," << r.label << "\n";
}

}  // namespace gzgd
