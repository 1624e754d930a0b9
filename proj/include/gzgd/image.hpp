#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "gzgd/common.hpp"

namespace gzgd {

// 8-bit grayscale image, row-major.
struct Image8 {
    int h = 0;
    int w = 0;
    std::vector<std::uint8_t> px;

    Image8() = default;
    Image8(int h_, int w_, std::uint8_t fill = 0) : h(h_), w(w_), px(static_cast<size_t>(h_) * w_, fill) {}

    std::uint8_t& at(int y, int x) { return px[static_cast<size_t>(y) * w + x]; }
    std::uint8_t at(int y, int x) const { return px[static_cast<size_t>(y) * w + x]; }

    bool operator==(const Image8&) const = default;
};

// H x W grid of doubles; carries mask planes and kernels.
struct Grid {
    int h = 0;
    int w = 0;
    std::vector<double> v;

    Grid() = default;
    Grid(int h_, int w_, double fill = 0.0) : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, fill) {}

    double& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
    double at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }

    bool same_shape(const Grid& o) const { return h == o.h && w == o.w; }
    bool operator==(const Grid&) const = default;
};

// Binary PGM (P5), maxval 255 only.
inline void write_pgm(const std::string& path, const Image8& img) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open for writing: " + path);
    f << "P5\n" << img.w << " " << img.h << "\n255\n";
    f.write(reinterpret_cast<const char*>(img.px.data()),
            static_cast<std::streamsize>(img.px.size()));
    if (!f) throw DataError("short write: " + path);
}

inline Image8 read_pgm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open: " + path);
    std::string magic;
    f >> magic;
    if (magic != "P5") throw DataError("not a P5 PGM: " + path);
    auto next_int = [&](const char* what) {
        // skip whitespace and '#' comment lines
        int c = f.peek();
        while (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '#') {
            if (c == '#') {
                std::string line;
                std::getline(f, line);
            } else {
                f.get();
            }
            c = f.peek();
        }
        long val = -1;
        f >> val;
        if (!f || val < 0) throw DataError(std::string("bad PGM ") + what + ": " + path);
        return val;
    };
    const long w = next_int("width");
    const long hh = next_int("height");
    const long maxval = next_int("maxval");
    if (maxval != 255) throw DataError("PGM maxval must be 255: " + path);
    f.get();  // single whitespace after maxval
    Image8 img(static_cast<int>(hh), static_cast<int>(w));
    f.read(reinterpret_cast<char*>(img.px.data()), static_cast<std::streamsize>(img.px.size()));
    if (f.gcount() != static_cast<std::streamsize>(img.px.size()))
        throw DataError("truncated PGM payload: " + path);
    return img;
}

}  // namespace gzgd
