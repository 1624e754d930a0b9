#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "gzgd/autodiff.hpp"
#include "gzgd/rng.hpp"

namespace testutil {

// temp directory wiped on destruction
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("gzgd_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

inline gzgd::Tensor<double> random_tensor(std::vector<int> shape, gzgd::Rng& rng,
                                          double lo = -1.0, double hi = 1.0) {
    gzgd::Tensor<double> t(std::move(shape));
    for (auto& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

// Central finite-difference check. `build` maps freshly wrapped parameter
// nodes to a scalar loss and must be deterministic across calls.
using GraphBuilder =
    std::function<gzgd::NodeP<double>(const std::vector<gzgd::NodeP<double>>&)>;

inline double fd_max_rel_err(const GraphBuilder& build,
                             const std::vector<gzgd::Tensor<double>>& inputs,
                             double eps = 1e-5) {
    std::vector<gzgd::NodeP<double>> params;
    for (const auto& t : inputs) params.push_back(gzgd::parameter(t));
    auto loss = build(params);
    gzgd::backward(loss);

    auto eval = [&](std::size_t pi, std::size_t i, double delta) {
        std::vector<gzgd::NodeP<double>> ps;
        for (std::size_t pj = 0; pj < inputs.size(); ++pj) {
            gzgd::Tensor<double> t = inputs[pj];
            if (pj == pi) t.data[i] += delta;
            ps.push_back(gzgd::parameter(std::move(t)));
        }
        return build(ps)->value.data[0];
    };

    double max_err = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        for (std::size_t i = 0; i < inputs[pi].numel(); ++i) {
            const double num = (eval(pi, i, eps) - eval(pi, i, -eps)) / (2.0 * eps);
            const double ana = params[pi]->grad.data[i];
            const double denom = std::max({1.0, std::fabs(num), std::fabs(ana)});
            max_err = std::max(max_err, std::fabs(num - ana) / denom);
        }
    }
    return max_err;
}

// random linear projection turning a tensor-valued op into a scalar loss
inline gzgd::NodeP<double> project(gzgd::NodeP<double> out, const gzgd::Tensor<double>& proj) {
    return gzgd::sum(gzgd::mul(out, gzgd::constant(proj)));
}

}  // namespace testutil
