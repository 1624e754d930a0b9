#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "gzgd/common.hpp"

namespace gzgd {

namespace mfdet {

inline std::uint64_t hash_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("manifest: cannot hash " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[1 << 16];
    while (f.read(buf, sizeof(buf)) || f.gcount() > 0)
        h = fnv1a64(buf, static_cast<std::size_t>(f.gcount()), h);
    return h;
}

}  // namespace mfdet

// Combined hash of a file, or of all regular files under a directory keyed
// by their sorted relative paths. Manifests themselves are excluded so a
// re-run over the same directory hashes identically.
inline std::string hash_path(const std::filesystem::path& path) {
    namespace fs = std::filesystem;
    if (fs::is_regular_file(path)) return hex64(mfdet::hash_file(path));
    if (!fs::is_directory(path)) throw DataError("manifest: no such path " + path.string());
    std::vector<std::string> rel;
    for (const auto& ent : fs::recursive_directory_iterator(path)) {
        if (!ent.is_regular_file()) continue;
        const std::string name = ent.path().filename().string();
        if (name == "manifest.json" || name.ends_with(".manifest.json")) continue;
        rel.push_back(fs::relative(ent.path(), path).generic_string());
    }
    std::sort(rel.begin(), rel.end());
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& r : rel) {
        h = fnv1a64(r.data(), r.size(), h);
        const std::uint64_t fh = mfdet::hash_file(path / r);
        h = fnv1a64(&fh, sizeof(fh), h);
    }
    return hex64(h);
}

// Every CLI run drops one of these next to its outputs; the resolved config
// plus seed is enough to reproduce the run exactly.
struct RunManifest {
    std::string subcommand;
    nlohmann::ordered_json config;  // fully resolved flags
    std::uint64_t seed = 0;
    std::map<std::string, std::string> input_hashes;
    std::map<std::string, std::string> output_hashes;

    void add_input(const std::filesystem::path& p) { input_hashes[p.string()] = hash_path(p); }
    void add_output(const std::filesystem::path& p) { output_hashes[p.string()] = hash_path(p); }

    void write(const std::filesystem::path& path) const {
        nlohmann::ordered_json j;
        j["tool"] = "gzgd";
        j["version"] = kVersion;
        j["subcommand"] = subcommand;
        j["seed"] = seed;
        j["config"] = config;
        j["inputs"] = input_hashes;
        j["outputs"] = output_hashes;
        std::ofstream f(path);
        if (!f) throw DataError("cannot write manifest: " + path.string());
        f << j.dump(2) << "\n";
    }
};

}  // namespace gzgd
