#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "gzgd/classifier.hpp"

namespace gzgd {

// positive class = successful (label 1)
struct ConfusionCounts {
    long tp = 0, tn = 0, fp = 0, fn = 0;

    long total() const { return tp + tn + fp + fn; }
};

inline ConfusionCounts confusion(const std::vector<Prediction>& preds) {
    if (preds.empty()) throw std::invalid_argument("confusion: empty prediction set");
    ConfusionCounts c;
    for (const auto& p : preds) {
        if (p.label == 1)
            (p.pred == 1 ? c.tp : c.fn)++;
        else
            (p.pred == 0 ? c.tn : c.fp)++;
    }
    return c;
}

inline double accuracy(const ConfusionCounts& c) {
    return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

inline double sensitivity(const ConfusionCounts& c) {
    const long d = c.tp + c.fn;
    return d == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(d);
}

inline double specificity(const ConfusionCounts& c) {
    const long d = c.tn + c.fp;
    return d == 0 ? 0.0 : static_cast<double>(c.tn) / static_cast<double>(d);
}

inline double precision(const ConfusionCounts& c) {
    const long d = c.tp + c.fp;
    return d == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(d);
}

// 0 when precision + recall is 0
inline double f1(const ConfusionCounts& c) {
    const double p = precision(c);
    const double r = sensitivity(c);
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

// 0 when any marginal is empty
inline double mcc(const ConfusionCounts& c) {
    const double m1 = static_cast<double>(c.tp + c.fp);
    const double m2 = static_cast<double>(c.tp + c.fn);
    const double m3 = static_cast<double>(c.tn + c.fp);
    const double m4 = static_cast<double>(c.tn + c.fn);
    if (m1 == 0.0 || m2 == 0.0 || m3 == 0.0 || m4 == 0.0) return 0.0;
    const double num = static_cast<double>(c.tp) * c.tn - static_cast<double>(c.fp) * c.fn;
    return num / std::sqrt(m1 * m2 * m3 * m4);
}

using CurvePoint = std::pair<double, double>;

namespace evdet {

struct ScoredLabel {
    double score;
    int label;
};

inline std::vector<ScoredLabel> sorted_desc(const std::vector<double>& scores,
                                            const std::vector<int>& labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw std::invalid_argument("curves: scores/labels size mismatch or empty");
    std::vector<ScoredLabel> v(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) v[i] = {scores[i], labels[i]};
    std::stable_sort(v.begin(), v.end(),
                     [](const ScoredLabel& a, const ScoredLabel& b) { return a.score > b.score; });
    return v;
}

}  // namespace evdet

// threshold sweep from (0,0) to (1,1); tied scores advance as one group
inline std::vector<CurvePoint> roc_curve(const std::vector<double>& scores,
                                         const std::vector<int>& labels) {
    const auto v = evdet::sorted_desc(scores, labels);
    long pos = 0, neg = 0;
    for (const auto& s : v) (s.label == 1 ? pos : neg)++;
    if (pos == 0 || neg == 0) throw std::invalid_argument("roc_curve: need both classes");
    std::vector<CurvePoint> curve = {{0.0, 0.0}};
    long tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < v.size()) {
        const double s = v[i].score;
        while (i < v.size() && v[i].score == s) {
            (v[i].label == 1 ? tp : fp)++;
            ++i;
        }
        curve.emplace_back(static_cast<double>(fp) / neg, static_cast<double>(tp) / pos);
    }
    return curve;
}

// trapezoid area; with tied scores this equals the Mann-Whitney statistic
// with half credit for ties
inline double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    const auto curve = roc_curve(scores, labels);
    double area = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i)
        area += (curve[i].first - curve[i - 1].first) * (curve[i].second + curve[i - 1].second) / 2.0;
    return area;
}

// sweep anchored at (recall 0, precision 1), ends at recall 1
inline std::vector<CurvePoint> pr_curve(const std::vector<double>& scores,
                                        const std::vector<int>& labels) {
    const auto v = evdet::sorted_desc(scores, labels);
    long pos = 0;
    for (const auto& s : v) pos += s.label == 1;
    if (pos == 0) throw std::invalid_argument("pr_curve: no positive samples");
    std::vector<CurvePoint> curve = {{0.0, 1.0}};
    long tp = 0, seen = 0;
    std::size_t i = 0;
    while (i < v.size()) {
        const double s = v[i].score;
        while (i < v.size() && v[i].score == s) {
            tp += v[i].label == 1;
            ++seen;
            ++i;
        }
        curve.emplace_back(static_cast<double>(tp) / pos,
                           static_cast<double>(tp) / static_cast<double>(seen));
    }
    return curve;
}

// average precision (step interpolation), not trapezoid
inline double pr_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    const auto curve = pr_curve(scores, labels);
    double area = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i)
        area += (curve[i].first - curve[i - 1].first) * curve[i].second;
    return area;
}

struct EvalReport {
    ConfusionCounts counts;
    double accuracy = 0.0, mcc = 0.0, f1 = 0.0, specificity = 0.0, sensitivity = 0.0;
    double roc_auc = 0.0, pr_auc = 0.0;
    long n = 0;
    std::vector<CurvePoint> roc, pr;
};

inline EvalReport evaluate(const std::vector<Prediction>& preds) {
    EvalReport r;
    r.counts = confusion(preds);
    r.accuracy = gzgd::accuracy(r.counts);
    r.mcc = gzgd::mcc(r.counts);
    r.f1 = gzgd::f1(r.counts);
    r.specificity = gzgd::specificity(r.counts);
    r.sensitivity = gzgd::sensitivity(r.counts);
    r.n = r.counts.total();
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& p : preds) {
        scores.push_back(p.probs[1]);
        labels.push_back(p.label);
    }
    r.roc = roc_curve(scores, labels);
    r.roc_auc = gzgd::roc_auc(scores, labels);
    r.pr = pr_curve(scores, labels);
    r.pr_auc = gzgd::pr_auc(scores, labels);
    return r;
}

inline nlohmann::ordered_json eval_report_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["accuracy"] = r.accuracy;
    j["mcc"] = r.mcc;
    j["f1"] = r.f1;
    j["specificity"] = r.specificity;
    j["sensitivity"] = r.sensitivity;
    j["roc_auc"] = r.roc_auc;
    j["pr_auc"] = r.pr_auc;
    j["n"] = r.n;
    auto pts = [](const std::vector<CurvePoint>& c) {
        nlohmann::ordered_json a = nlohmann::ordered_json::array();
        for (const auto& p : c) a.push_back({p.first, p.second});
        return a;
    };
    j["curves"]["roc"] = pts(r.roc);
    j["curves"]["pr"] = pts(r.pr);
    j["percent"] = {{"accuracy", 100.0 * r.accuracy},       {"mcc", 100.0 * r.mcc},
                    {"f1", 100.0 * r.f1},                   {"specificity", 100.0 * r.specificity},
                    {"sensitivity", 100.0 * r.sensitivity}, {"roc_auc", 100.0 * r.roc_auc},
                    {"pr_auc", 100.0 * r.pr_auc}};
    j["meta"] = {{"positive_class", 1},
                 {"pr_area_rule", "average precision (step interpolation)"},
                 {"counts",
                  {{"tp", r.counts.tp}, {"tn", r.counts.tn}, {"fp", r.counts.fp}, {"fn", r.counts.fn}}}};
    return j;
}

}  // namespace gzgd
