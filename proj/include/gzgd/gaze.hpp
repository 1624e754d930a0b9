#pragma once

#include <charconv>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "gzgd/common.hpp"

namespace gzgd {

struct GazePoint {
    int frame = 0;
    double x = 0.0;
    double y = 0.0;
    bool present = false;
};

struct GazeTrace {
    std::string clip_id;
    std::vector<GazePoint> points;  // one slot per frame, index == frame
    bool all_missing = false;       // set by interpolate_missing when nothing was present

    int frames() const { return static_cast<int>(points.size()); }
};

namespace detail {

inline bool parse_double(const std::string& s, double& out) {
    const char* b = s.data();
    const char* e = b + s.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    while (e > b && (e[-1] == ' ' || e[-1] == '\t')) --e;
    if (b == e) return false;
    auto [p, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && p == e;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace detail

// Parses `frame,x,y` rows into a trace with one slot per frame. Rows with
// empty x or y mark the frame missing; frames absent from the file are
// missing too. Out-of-bounds coordinates are NOT clamped here; see
// clamp_to_frame below, which the loaders apply once the frame size is known.
inline GazeTrace parse_gaze_csv(std::istream& in, int expected_frames,
                                const std::string& clip_id = "") {
    GazeTrace trace;
    trace.clip_id = clip_id;
    trace.points.resize(static_cast<size_t>(expected_frames));
    for (int i = 0; i < expected_frames; ++i) {
        trace.points[i].frame = i;
        trace.points[i].present = false;
    }

    std::string line;
    if (!std::getline(in, line)) throw DataError("gaze csv: empty stream");
    {
        auto header = detail::split_csv_line(line);
        if (header.size() != 3 || header[0] != "frame" || header[1] != "x" || header[2] != "y")
            throw DataError("gaze csv: expected header 'frame,x,y'");
    }

    int line_no = 1;
    int last_frame = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != 3)
            throw DataError("gaze csv line " + std::to_string(line_no) + ": expected 3 fields");
        double framef = 0.0;
        if (!detail::parse_double(fields[0], framef) || framef < 0.0 ||
            framef != static_cast<double>(static_cast<long long>(framef)))
            throw DataError("gaze csv line " + std::to_string(line_no) + ": bad frame index '" +
                            fields[0] + "'");
        const int frame = static_cast<int>(framef);
        if (frame <= last_frame) {
            if (frame == last_frame)
                throw DataError("gaze csv line " + std::to_string(line_no) + ": duplicate frame " +
                                std::to_string(frame));
            throw DataError("gaze csv line " + std::to_string(line_no) +
                            ": frames not strictly increasing");
        }
        last_frame = frame;
        if (frame >= expected_frames)
            throw DataError("gaze csv line " + std::to_string(line_no) + ": frame " +
                            std::to_string(frame) + " beyond clip length " +
                            std::to_string(expected_frames));

        const bool x_empty = fields[1].empty();
        const bool y_empty = fields[2].empty();
        if (x_empty || y_empty) continue;  // slot stays missing
        double x = 0.0, y = 0.0;
        if (!detail::parse_double(fields[1], x))
            throw DataError("gaze csv line " + std::to_string(line_no) + ": bad x '" + fields[1] + "'");
        if (!detail::parse_double(fields[2], y))
            throw DataError("gaze csv line " + std::to_string(line_no) + ": bad y '" + fields[2] + "'");
        trace.points[frame] = GazePoint{frame, x, y, true};
    }
    return trace;
}

inline GazeTrace parse_gaze_csv(const std::string& text, int expected_frames,
                                const std::string& clip_id = "") {
    std::istringstream in(text);
    return parse_gaze_csv(in, expected_frames, clip_id);
}

inline std::string serialize_gaze_csv(const GazeTrace& trace) {
    std::string out = "frame,x,y\n";
    char buf[80];
    for (const auto& p : trace.points) {
        if (p.present) {
            std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", p.frame, p.x, p.y);
        } else {
            std::snprintf(buf, sizeof(buf), "%d,,\n", p.frame);
        }
        out += buf;
    }
    return out;
}

// Off-screen samples are clamped to the border rather than dropped, so the
// temporal sequence stays intact.
inline void clamp_to_frame(GazeTrace& trace, int h, int w) {
    for (auto& p : trace.points) {
        if (!p.present) continue;
        if (p.x < 0.0) p.x = 0.0;
        if (p.y < 0.0) p.y = 0.0;
        if (p.x > w - 1) p.x = static_cast<double>(w - 1);
        if (p.y > h - 1) p.y = static_cast<double>(h - 1);
    }
}

// Interior gaps are filled by linear interpolation between the bracketing
// present samples; leading/trailing gaps copy the nearest present sample.
// A trace with no present samples is returned unchanged, flagged all_missing.
inline GazeTrace interpolate_missing(const GazeTrace& trace) {
    GazeTrace out = trace;
    const int n = out.frames();
    int first = -1, last = -1;
    for (int i = 0; i < n; ++i) {
        if (out.points[i].present) {
            if (first < 0) first = i;
            last = i;
        }
    }
    if (first < 0) {
        out.all_missing = true;
        return out;
    }
    out.all_missing = false;
    for (int i = 0; i < first; ++i) {
        out.points[i].x = out.points[first].x;
        out.points[i].y = out.points[first].y;
        out.points[i].present = true;
    }
    for (int i = last + 1; i < n; ++i) {
        out.points[i].x = out.points[last].x;
        out.points[i].y = out.points[last].y;
        out.points[i].present = true;
    }
    int prev = first;
    for (int i = first + 1; i <= last; ++i) {
        if (!out.points[i].present) continue;
        if (i > prev + 1) {
            const auto& a = out.points[prev];
            const auto& b = out.points[i];
            const double span = static_cast<double>(i - prev);
            for (int k = prev + 1; k < i; ++k) {
                const double t = static_cast<double>(k - prev) / span;
                out.points[k].x = a.x + t * (b.x - a.x);
                out.points[k].y = a.y + t * (b.y - a.y);
                out.points[k].present = true;
            }
        }
        prev = i;
    }
    return out;
}

}  // namespace gzgd
