#pragma once

#include <cstddef>
#include <vector>

namespace beta {

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;

    void add(bool predicted, bool truth) {
        if (predicted && truth) ++tp;
        else if (predicted && !truth) ++fp;
        else if (!predicted && truth) ++fn;
        else ++tn;
    }
    std::size_t total() const { return tp + fp + fn + tn; }
};

double precision(const ConfusionCounts& c);
double recall(const ConfusionCounts& c);
// Harmonic mean of precision and recall; 0 when both are 0.
double f1(const ConfusionCounts& c);

struct PrPoint {
    double recall;
    double precision;
};

struct PrCurve {
    std::vector<PrPoint> points;  // recall non-decreasing
    double area = 0.0;
};

// PR curve swept over every distinct score (classify positive iff score >= s,
// tied scores flip together), anchored at (0, precision of the top group),
// integrated by trapezoid. Throws metric_error when there are no positives.
PrCurve pr_curve(const std::vector<double>& scores, const std::vector<bool>& labels);
double auc_pr(const std::vector<double>& scores, const std::vector<bool>& labels);

// Fraction of pooled (target, step) decisions that match ground truth after
// the attack. Throws metric_error on an empty pool.
double fta(const std::vector<bool>& decisions_after_attack,
           const std::vector<bool>& ground_truth);

}  // namespace beta
