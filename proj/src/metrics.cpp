#include "beta/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "beta/errors.hpp"

namespace beta {

double precision(const ConfusionCounts& c) {
    return c.tp + c.fp == 0 ? 0.0
                            : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

double recall(const ConfusionCounts& c) {
    return c.tp + c.fn == 0 ? 0.0
                            : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

double f1(const ConfusionCounts& c) {
    const double p = precision(c);
    const double r = recall(c);
    if (p + r == 0.0) return 0.0;
    return 2.0 * p * r / (p + r);
}

PrCurve pr_curve(const std::vector<double>& scores, const std::vector<bool>& labels) {
    if (scores.size() != labels.size())
        throw dim_error("pr_curve: scores/labels length mismatch");
    const std::size_t pos =
        static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
    if (pos == 0) throw metric_error("pr_curve: no positive labels");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });

    PrCurve curve;
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    bool first_group = true;
    while (i < order.size()) {
        const double s = scores[order[i]];
        // All points tied at this score flip together.
        while (i < order.size() && scores[order[i]] == s) {
            if (labels[order[i]]) ++tp;
            else ++fp;
            ++i;
        }
        const double r = static_cast<double>(tp) / static_cast<double>(pos);
        const double p = static_cast<double>(tp) / static_cast<double>(tp + fp);
        if (first_group) {
            curve.points.push_back({0.0, p});
            first_group = false;
        }
        curve.points.push_back({r, p});
    }

    double area = 0.0;
    for (std::size_t k = 1; k < curve.points.size(); ++k) {
        const auto& a = curve.points[k - 1];
        const auto& b = curve.points[k];
        area += (b.recall - a.recall) * 0.5 * (a.precision + b.precision);
    }
    curve.area = area;
    return curve;
}

double auc_pr(const std::vector<double>& scores, const std::vector<bool>& labels) {
    return pr_curve(scores, labels).area;
}

double fta(const std::vector<bool>& decisions_after_attack,
           const std::vector<bool>& ground_truth) {
    if (decisions_after_attack.size() != ground_truth.size())
        throw dim_error("fta: decisions/truth length mismatch");
    if (decisions_after_attack.empty()) throw metric_error("fta: empty evaluation set");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ground_truth.size(); ++i)
        if (decisions_after_attack[i] == ground_truth[i]) ++correct;
    return static_cast<double>(correct) /
           static_cast<double>(decisions_after_attack.size());
}

}  // namespace beta
