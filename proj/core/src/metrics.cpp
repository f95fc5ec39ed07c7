#include "mgtd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mgtd::metrics {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_both_labels(std::int64_t positives, std::int64_t negatives, const char* op) {
    if (positives == 0) {
        throw std::runtime_error(std::string(op) + ": no samples with label `machine`");
    }
    if (negatives == 0) {
        throw std::runtime_error(std::string(op) + ": no samples with label `human`");
    }
}

std::string format_threshold(double t) {
    if (t == kInf) {
        return "inf";
    }
    if (t == -kInf) {
        return "-inf";
    }
    // Shortest representation that round-trips exactly.
    return nlohmann::json(t).dump();
}

}  // namespace

RocCurve roc_curve(std::span<const ScoredSample> scored) {
    RocCurve curve;
    std::vector<std::pair<double, Label>> points;
    points.reserve(scored.size());
    for (const auto& s : scored) {
        if (!std::isfinite(s.score)) {
            throw std::runtime_error("roc_curve: non-finite score for id `" + s.id + "`");
        }
        points.emplace_back(s.score, s.label);
        if (s.label == Label::machine) {
            ++curve.positives;
        } else {
            ++curve.negatives;
        }
    }
    require_both_labels(curve.positives, curve.negatives, "roc_curve");

    std::sort(points.begin(), points.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    curve.points.push_back({kInf, 0.0, 0.0});
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::size_t i = 0;
    while (i < points.size()) {
        double score = points[i].first;
        // Consume the whole tie group: one operating point per distinct score.
        while (i < points.size() && points[i].first == score) {
            if (points[i].second == Label::machine) {
                ++tp;
            } else {
                ++fp;
            }
            ++i;
        }
        curve.points.push_back({score, static_cast<double>(fp) / curve.negatives,
                                static_cast<double>(tp) / curve.positives});
    }
    curve.points.push_back({-kInf, 1.0, 1.0});
    return curve;
}

double auc(const RocCurve& curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
    }
    return area;
}

OperatingPoint tpr_at_fpr(const RocCurve& curve, double fpr_target) {
    if (!(fpr_target > 0.0 && fpr_target < 1.0)) {
        throw std::invalid_argument("tpr_at_fpr: target must lie in (0, 1)");
    }
    OperatingPoint best{0.0, kInf};
    for (const auto& p : curve.points) {
        if (p.fpr > fpr_target) {
            break;  // fpr is non-decreasing along the curve
        }
        if (p.tpr > best.tpr) {
            best = {p.tpr, p.threshold};
        }
    }
    return best;
}

ConfusionCounts confusion(std::span<const ScoredSample> scored, double threshold) {
    ConfusionCounts c;
    for (const auto& s : scored) {
        bool machine = predict_machine(s.score, threshold);
        if (s.label == Label::machine) {
            machine ? ++c.tp : ++c.fn;
        } else {
            machine ? ++c.fp : ++c.tn;
        }
    }
    return c;
}

double fnr(const ConfusionCounts& c) {
    std::int64_t positives = c.tp + c.fn;
    return positives == 0 ? 0.0 : static_cast<double>(c.fn) / positives;
}

double fpr(const ConfusionCounts& c) {
    std::int64_t negatives = c.fp + c.tn;
    return negatives == 0 ? 0.0 : static_cast<double>(c.fp) / negatives;
}

double macro_f1(const ConfusionCounts& c) {
    require_both_labels(c.tp + c.fn, c.fp + c.tn, "macro_f1");
    double machine_denom = static_cast<double>(2 * c.tp + c.fp + c.fn);
    double human_denom = static_cast<double>(2 * c.tn + c.fn + c.fp);
    double f1_machine = machine_denom == 0.0 ? 0.0 : 2.0 * c.tp / machine_denom;
    double f1_human = human_denom == 0.0 ? 0.0 : 2.0 * c.tn / human_denom;
    return (f1_machine + f1_human) / 2.0;
}

MetricsReport evaluate(std::span<const ScoredSample> scored,
                       const std::vector<double>& thresholds,
                       const std::vector<double>& fpr_targets,
                       const std::optional<std::string>& group_by) {
    MetricsReport report;
    for (const auto& s : scored) {
        (s.label == Label::machine ? report.n_machine : report.n_human)++;
    }
    require_both_labels(report.n_machine, report.n_human, "evaluate");

    RocCurve curve = roc_curve(scored);
    report.auc = auc(curve);
    for (double target : fpr_targets) {
        report.tpr_at_fpr[target] = tpr_at_fpr(curve, target);
    }
    for (double t : thresholds) {
        ThresholdMetrics tm;
        tm.counts = confusion(scored, t);
        tm.fnr = fnr(tm.counts);
        tm.fpr = fpr(tm.counts);
        tm.macro_f1 = macro_f1(tm.counts);
        report.threshold_metrics[t] = tm;
    }

    if (group_by) {
        report.group_by = *group_by;
        auto field = [&](const ScoredSample& s) -> const std::string& {
            if (*group_by == "language") {
                return s.language;
            }
            if (*group_by == "generator") {
                return s.generator;
            }
            if (*group_by == "dataset") {
                return s.dataset;
            }
            throw std::invalid_argument("evaluate: unknown group_by field `" + *group_by + "`");
        };
        std::map<std::string, std::vector<ScoredSample>> groups;
        for (const auto& s : scored) {
            groups[field(s)].push_back(s);
        }
        for (const auto& [key, members] : groups) {
            bool has_human = std::any_of(members.begin(), members.end(),
                                         [](const auto& s) { return s.label == Label::human; });
            bool has_machine = std::any_of(members.begin(), members.end(),
                                           [](const auto& s) { return s.label == Label::machine; });
            if (!has_human || !has_machine) {
                report.skipped_groups.push_back(key);
                continue;
            }
            report.per_group[key] = evaluate(members, thresholds, fpr_targets, std::nullopt);
        }
    }
    return report;
}

nlohmann::json MetricsReport::to_json() const {
    nlohmann::json j{
        {"n_human", n_human},
        {"n_machine", n_machine},
        {"auc", auc},
    };
    nlohmann::json targets = nlohmann::json::object();
    for (const auto& [target, op] : tpr_at_fpr) {
        targets[format_threshold(target)] = {{"tpr", op.tpr},
                                             {"threshold", format_threshold(op.threshold)}};
    }
    j["tpr_at_fpr"] = targets;
    nlohmann::json per_threshold = nlohmann::json::object();
    for (const auto& [t, tm] : threshold_metrics) {
        per_threshold[format_threshold(t)] = {
            {"tp", tm.counts.tp},       {"fp", tm.counts.fp}, {"tn", tm.counts.tn},
            {"fn", tm.counts.fn},       {"fnr", tm.fnr},      {"fpr", tm.fpr},
            {"macro_f1", tm.macro_f1},
        };
    }
    j["threshold_metrics"] = per_threshold;
    if (!group_by.empty()) {
        j["group_by"] = group_by;
        nlohmann::json groups = nlohmann::json::object();
        for (const auto& [key, sub] : per_group) {
            groups[key] = sub.to_json();
        }
        j["per_group"] = groups;
        j["skipped_groups"] = skipped_groups;
    }
    return j;
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
    MetricsReport r;
    r.n_human = j.at("n_human").get<std::int64_t>();
    r.n_machine = j.at("n_machine").get<std::int64_t>();
    r.auc = j.at("auc").get<double>();
    auto parse_number = [](const std::string& s) -> double {
        if (s == "inf") {
            return kInf;
        }
        if (s == "-inf") {
            return -kInf;
        }
        return std::stod(s);
    };
    for (const auto& [key, value] : j.at("tpr_at_fpr").items()) {
        OperatingPoint op;
        op.tpr = value.at("tpr").get<double>();
        op.threshold = parse_number(value.at("threshold").get<std::string>());
        r.tpr_at_fpr[parse_number(key)] = op;
    }
    for (const auto& [key, value] : j.at("threshold_metrics").items()) {
        ThresholdMetrics tm;
        tm.counts.tp = value.at("tp").get<std::int64_t>();
        tm.counts.fp = value.at("fp").get<std::int64_t>();
        tm.counts.tn = value.at("tn").get<std::int64_t>();
        tm.counts.fn = value.at("fn").get<std::int64_t>();
        tm.fnr = value.at("fnr").get<double>();
        tm.fpr = value.at("fpr").get<double>();
        tm.macro_f1 = value.at("macro_f1").get<double>();
        r.threshold_metrics[parse_number(key)] = tm;
    }
    if (j.contains("group_by")) {
        r.group_by = j.at("group_by").get<std::string>();
        for (const auto& [key, value] : j.at("per_group").items()) {
            r.per_group[key] = from_json(value);
        }
        r.skipped_groups = j.at("skipped_groups").get<std::vector<std::string>>();
    }
    return r;
}

std::string roc_csv(const RocCurve& curve) {
    std::ostringstream out;
    out << "threshold,fpr,tpr\n";
    out.precision(17);
    for (const auto& p : curve.points) {
        out << format_threshold(p.threshold) << ',' << p.fpr << ',' << p.tpr << '\n';
    }
    return out.str();
}

nlohmann::json roc_to_json(const RocCurve& curve) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : curve.points) {
        points.push_back({format_threshold(p.threshold), p.fpr, p.tpr});
    }
    return nlohmann::json{
        {"points", points}, {"positives", curve.positives}, {"negatives", curve.negatives}};
}

RocCurve roc_from_json(const nlohmann::json& j) {
    RocCurve curve;
    curve.positives = j.at("positives").get<std::int64_t>();
    curve.negatives = j.at("negatives").get<std::int64_t>();
    for (const auto& p : j.at("points")) {
        auto t = p.at(0).get<std::string>();
        double threshold = t == "inf" ? kInf : t == "-inf" ? -kInf : std::stod(t);
        curve.points.push_back({threshold, p.at(1).get<double>(), p.at(2).get<double>()});
    }
    return curve;
}

}  // namespace mgtd::metrics
