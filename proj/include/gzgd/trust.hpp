#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "gzgd/classifier.hpp"

namespace gzgd {

// Question-answer trust rewards confident correct predictions and penalizes
// confident wrong ones; the spectrum aggregates per ground-truth class and
// NetTrustScore is the prior-weighted combination.
struct TrustConfig {
    double alpha = 1.0;  // reward exponent (distinct from the mask decay alpha)
    double beta = 1.0;   // penalty exponent
    int density_grid = 256;
    bool uniform_prior = false;  // default: empirical class frequencies

    void validate() const {
        if (!(alpha > 0.0 && beta > 0.0)) throw DataError("trust: alpha, beta must be > 0");
        if (density_grid < 2) throw DataError("trust: density grid must be >= 2");
    }
};

// C(y|x)^alpha when the prediction matches ground truth z, else (1-C(y|x))^beta,
// with C(y|x) the softmax confidence of the predicted label.
inline double question_answer_trust(const Prediction& pred, int z, const TrustConfig& cfg) {
    const double conf = pred.confidence();
    if (pred.pred == z) return std::pow(conf, cfg.alpha);
    return std::pow(1.0 - conf, cfg.beta);
}

namespace trdet {

inline std::vector<double> class_trust_values(const std::vector<Prediction>& preds, int z,
                                              const TrustConfig& cfg) {
    std::vector<double> q;
    for (const auto& p : preds)
        if (p.label == z) q.push_back(question_answer_trust(p, z, cfg));
    return q;
}

}  // namespace trdet

// mean question-answer trust over samples whose ground truth is z
inline double trust_spectrum(const std::vector<Prediction>& preds, int z, const TrustConfig& cfg) {
    const auto q = trdet::class_trust_values(preds, z, cfg);
    if (q.empty()) throw DataError("trust_spectrum: no samples for class " + std::to_string(z));
    double s = 0.0;
    for (double v : q) s += v;
    return s / static_cast<double>(q.size());
}

// NTS = sum_z P(z) * T_M(z)
inline double net_trust_score(const std::vector<Prediction>& preds, const TrustConfig& cfg) {
    long n[2] = {0, 0};
    for (const auto& p : preds) n[p.label]++;
    if (n[0] == 0 || n[1] == 0) throw DataError("net_trust_score: both classes must be present");
    const double total = static_cast<double>(preds.size());
    double nts = 0.0;
    for (int z = 0; z < 2; ++z) {
        const double prior = cfg.uniform_prior ? 0.5 : static_cast<double>(n[z]) / total;
        nts += prior * trust_spectrum(preds, z, cfg);
    }
    return nts;
}

// Gaussian KDE over the class-z trust values, evaluated on a uniform grid
// over [0,1] and renormalized to integrate to 1 there. Bandwidth follows
// Silverman's rule; degenerate samples fall back to a narrow kernel.
inline std::vector<double> trust_density(const std::vector<Prediction>& preds, int z,
                                         const TrustConfig& cfg) {
    cfg.validate();
    auto q = trdet::class_trust_values(preds, z, cfg);
    if (q.empty()) throw DataError("trust_density: no samples for class " + std::to_string(z));

    double h = 0.01;  // narrow kernel for single/degenerate samples
    if (q.size() >= 2) {
        const double n = static_cast<double>(q.size());
        double mean = 0.0;
        for (double v : q) mean += v;
        mean /= n;
        double var = 0.0;
        for (double v : q) var += (v - mean) * (v - mean);
        var /= (n - 1.0);
        const double sd = std::sqrt(var);
        std::vector<double> sorted = q;
        std::sort(sorted.begin(), sorted.end());
        auto quantile = [&](double p) {
            const double pos = p * (n - 1.0);
            const std::size_t lo = static_cast<std::size_t>(pos);
            const double frac = pos - static_cast<double>(lo);
            if (lo + 1 >= sorted.size()) return sorted.back();
            return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
        };
        const double iqr = quantile(0.75) - quantile(0.25);
        double spread = std::min(sd, iqr / 1.34);
        if (spread == 0.0) spread = std::max(sd, iqr / 1.34);
        if (spread > 0.0) h = std::max(0.9 * spread * std::pow(n, -0.2), 1e-3);
    }

    const int g = cfg.density_grid;
    std::vector<double> density(g, 0.0);
    const double inv_h = 1.0 / h;
    const double norm = 1.0 / (std::sqrt(2.0 * 3.14159265358979323846) * h *
                               static_cast<double>(q.size()));
    for (int i = 0; i < g; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(g - 1);
        double acc = 0.0;
        for (double v : q) {
            const double u = (x - v) * inv_h;
            acc += std::exp(-0.5 * u * u);
        }
        density[i] = acc * norm;
    }
    // renormalize over [0,1] by the trapezoid rule
    double integral = 0.0;
    const double dx = 1.0 / static_cast<double>(g - 1);
    for (int i = 1; i < g; ++i) integral += (density[i] + density[i - 1]) * 0.5 * dx;
    if (integral > 0.0)
        for (double& d : density) d /= integral;
    return density;
}

struct TrustClassReport {
    double qz_mean = 0.0;
    long n = 0;
    std::vector<double> density;
};

struct TrustReport {
    TrustClassReport per_class[2];
    double priors[2] = {0.0, 0.0};
    double nts = 0.0;
    bool high_nts = false;  // paper reads NTS above 0.8 as trustworthy
};

inline TrustReport trust_report(const std::vector<Prediction>& preds, const TrustConfig& cfg) {
    cfg.validate();
    TrustReport r;
    long n[2] = {0, 0};
    for (const auto& p : preds) n[p.label]++;
    if (n[0] == 0 || n[1] == 0) throw DataError("trust_report: both classes must be present");
    for (int z = 0; z < 2; ++z) {
        r.per_class[z].qz_mean = trust_spectrum(preds, z, cfg);
        r.per_class[z].n = n[z];
        r.per_class[z].density = trust_density(preds, z, cfg);
        r.priors[z] = cfg.uniform_prior ? 0.5
                                        : static_cast<double>(n[z]) /
                                              static_cast<double>(preds.size());
    }
    r.nts = r.priors[0] * r.per_class[0].qz_mean + r.priors[1] * r.per_class[1].qz_mean;
    r.high_nts = r.nts > 0.8;
    return r;
}

inline nlohmann::ordered_json trust_report_json(const TrustReport& r) {
    nlohmann::ordered_json j;
    for (int z = 0; z < 2; ++z) {
        nlohmann::ordered_json c;
        c["qz_mean"] = r.per_class[z].qz_mean;
        c["n"] = r.per_class[z].n;
        c["density_grid"] = r.per_class[z].density;
        j["per_class"][std::to_string(z)] = std::move(c);
    }
    j["nts"] = r.nts;
    j["priors"] = {r.priors[0], r.priors[1]};
    j["high_nts"] = r.high_nts;
    j["meta"] = {{"high_nts_threshold", 0.8}, {"density_grid_span", {0.0, 1.0}}};
    return j;
}

}  // namespace gzgd
