#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "gzgd/common.hpp"
#include "gzgd/tensor.hpp"

namespace gzgd {

// Versioned tensor container, little-endian throughout:
//   magic "GZGD" | version u32 | count u32 |
//   count x { name_len u32 | name bytes | dtype u8 (0=f32,1=f64) |
//             ndim u32 | ndim x dim u32 | raw values }
// Round-trips are bit-exact; unknown versions are rejected.
enum class Dtype : std::uint8_t { f32 = 0, f64 = 1 };

struct CheckpointEntry {
    std::string name;
    Dtype dtype = Dtype::f32;
    std::vector<int> shape;
    std::vector<std::uint8_t> raw;  // little-endian payload

    std::size_t numel() const {
        std::size_t n = 1;
        for (int d : shape) n *= static_cast<std::size_t>(d);
        return n;
    }

    template <typename T>
    std::vector<T> values() const {
        static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
        const Dtype want = std::is_same_v<T, float> ? Dtype::f32 : Dtype::f64;
        if (dtype != want) throw DataError("checkpoint entry '" + name + "': dtype mismatch");
        std::vector<T> out(numel());
        if (raw.size() != out.size() * sizeof(T))
            throw DataError("checkpoint entry '" + name + "': payload size mismatch");
        std::memcpy(out.data(), raw.data(), raw.size());
        return out;
    }

    template <typename T>
    static CheckpointEntry make(std::string name, std::vector<int> shape, const T* data,
                                std::size_t n) {
        static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
        CheckpointEntry e;
        e.name = std::move(name);
        e.dtype = std::is_same_v<T, float> ? Dtype::f32 : Dtype::f64;
        e.shape = std::move(shape);
        if (e.numel() != n) throw DataError("checkpoint entry '" + e.name + "': shape/count mismatch");
        e.raw.resize(n * sizeof(T));
        std::memcpy(e.raw.data(), data, e.raw.size());
        return e;
    }
};

struct Checkpoint {
    static constexpr std::uint32_t kVersion = 1;
    std::vector<CheckpointEntry> entries;

    const CheckpointEntry& find(const std::string& name) const {
        for (const auto& e : entries)
            if (e.name == name) return e;
        throw DataError("checkpoint: missing entry '" + name + "'");
    }

    bool has(const std::string& name) const {
        for (const auto& e : entries)
            if (e.name == name) return true;
        return false;
    }
};

namespace detail {

inline void put_u32(std::ostream& f, std::uint32_t v) {
    f.write(reinterpret_cast<const char*>(&v), 4);
}

inline std::uint32_t get_u32(std::istream& f, const char* what) {
    std::uint32_t v = 0;
    f.read(reinterpret_cast<char*>(&v), 4);
    if (!f) throw DataError(std::string("checkpoint: truncated ") + what);
    return v;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open for writing: " + path);
    f.write("GZGD", 4);
    detail::put_u32(f, Checkpoint::kVersion);
    detail::put_u32(f, static_cast<std::uint32_t>(ckpt.entries.size()));
    for (const auto& e : ckpt.entries) {
        detail::put_u32(f, static_cast<std::uint32_t>(e.name.size()));
        f.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        const auto dt = static_cast<std::uint8_t>(e.dtype);
        f.write(reinterpret_cast<const char*>(&dt), 1);
        detail::put_u32(f, static_cast<std::uint32_t>(e.shape.size()));
        for (int d : e.shape) detail::put_u32(f, static_cast<std::uint32_t>(d));
        f.write(reinterpret_cast<const char*>(e.raw.data()),
                static_cast<std::streamsize>(e.raw.size()));
    }
    if (!f) throw DataError("short write: " + path);
}

template <typename T>
void ckpt_put(Checkpoint& ckpt, const std::string& name, const Tensor<T>& t) {
    ckpt.entries.push_back(CheckpointEntry::make(name, t.shape, t.data.data(), t.data.size()));
}

template <typename T>
Tensor<T> ckpt_get(const Checkpoint& ckpt, const std::string& name) {
    const auto& e = ckpt.find(name);
    return Tensor<T>(e.shape, e.template values<T>());
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open: " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "GZGD", 4) != 0)
        throw DataError("not a GZGD checkpoint: " + path);
    const auto version = detail::get_u32(f, "version");
    if (version != Checkpoint::kVersion)
        throw DataError("unsupported checkpoint version " + std::to_string(version) + ": " + path);
    const auto count = detail::get_u32(f, "entry count");
    Checkpoint ckpt;
    ckpt.entries.resize(count);
    for (auto& e : ckpt.entries) {
        const auto name_len = detail::get_u32(f, "name length");
        e.name.resize(name_len);
        f.read(e.name.data(), name_len);
        std::uint8_t dt = 0;
        f.read(reinterpret_cast<char*>(&dt), 1);
        if (!f) throw DataError("checkpoint: truncated entry header: " + path);
        if (dt > 1) throw DataError("checkpoint: unknown dtype: " + path);
        e.dtype = static_cast<Dtype>(dt);
        const auto ndim = detail::get_u32(f, "ndim");
        e.shape.resize(ndim);
        for (auto& d : e.shape) d = static_cast<int>(detail::get_u32(f, "dim"));
        const std::size_t bytes = e.numel() * (e.dtype == Dtype::f32 ? 4 : 8);
        e.raw.resize(bytes);
        f.read(reinterpret_cast<char*>(e.raw.data()), static_cast<std::streamsize>(bytes));
        if (!f) throw DataError("checkpoint: truncated payload for '" + e.name + "': " + path);
    }
    return ckpt;
}

}  // namespace gzgd
