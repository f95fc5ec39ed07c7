#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mgtd/scored_sample.hpp"

namespace mgtd::metrics {

// Machine is the positive class throughout this module.

struct RocPoint {
    double threshold = 0.0;  // +-infinity at the sentinels
    double fpr = 0.0;
    double tpr = 0.0;
};

// Ordered operating points: thresholds strictly decreasing, fpr/tpr
// non-decreasing, one point per distinct score (ties collapsed), with
// (+inf, 0, 0) first and (-inf, 1, 1) last.
struct RocCurve {
    std::vector<RocPoint> points;
    std::int64_t positives = 0;  // machine samples
    std::int64_t negatives = 0;  // human samples
};

// Standard construction: sort by score descending, sweep distinct scores as
// thresholds with predict-machine-when score >= threshold. Throws on
// single-class input, naming the missing label.
RocCurve roc_curve(std::span<const ScoredSample> scored);

// Trapezoidal area under the (fpr, tpr) polyline. Equals the Mann-Whitney
// statistic P(score_m > score_h) + 1/2 P(score_m == score_h).
double auc(const RocCurve& curve);

struct OperatingPoint {
    double tpr = 0.0;
    double threshold = 0.0;
};

// Highest TPR among realized operating points with fpr <= fpr_target, and
// the threshold attaining it (no interpolation). When only the all-negative
// sentinel qualifies this is (0, +inf) -- a detector that cannot reach the
// target FPR scores a hard zero.
OperatingPoint tpr_at_fpr(const RocCurve& curve, double fpr_target);

struct ConfusionCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t tn = 0;
    std::int64_t fn = 0;

    bool operator==(const ConfusionCounts&) const = default;
};

// The single source of truth for the decision rule: machine iff
// score >= threshold (ties go to machine).
inline bool predict_machine(double score, double threshold) { return score >= threshold; }

ConfusionCounts confusion(std::span<const ScoredSample> scored, double threshold);

double fnr(const ConfusionCounts& counts);  // fn / (tp + fn)
double fpr(const ConfusionCounts& counts);  // fp / (fp + tn)

// Mean of the machine-class and human-class F1. A class F1 with a zero
// denominator contributes 0. Requires at least one sample of each label.
double macro_f1(const ConfusionCounts& counts);

struct ThresholdMetrics {
    ConfusionCounts counts;
    double fnr = 0.0;
    double fpr = 0.0;
    double macro_f1 = 0.0;
};

struct MetricsReport {
    std::int64_t n_human = 0;
    std::int64_t n_machine = 0;
    double auc = 0.0;
    std::map<double, OperatingPoint> tpr_at_fpr;          // keyed by fpr target
    std::map<double, ThresholdMetrics> threshold_metrics; // keyed by threshold
    std::string group_by;
    std::map<std::string, MetricsReport> per_group;  // one level deep
    std::vector<std::string> skipped_groups;         // groups missing a label

    nlohmann::json to_json() const;
    static MetricsReport from_json(const nlohmann::json& j);
};

// Full evaluation; per-group sub-reports (group_by in {language, generator,
// dataset}) are computed over each group's subset, skipping groups that
// lack one of the labels.
MetricsReport evaluate(std::span<const ScoredSample> scored,
                       const std::vector<double>& thresholds,
                       const std::vector<double>& fpr_targets,
                       const std::optional<std::string>& group_by = std::nullopt);

// ROC points as CSV (`threshold,fpr,tpr`, infinities spelled inf/-inf).
std::string roc_csv(const RocCurve& curve);

nlohmann::json roc_to_json(const RocCurve& curve);
RocCurve roc_from_json(const nlohmann::json& j);

}  // namespace mgtd::metrics
