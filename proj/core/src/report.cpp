#include "mgtd/report.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "mgtd/csv.hpp"

namespace mgtd::report {

namespace {

std::string fmt(double v, int digits = 4) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(digits);
    out << v;
    return out.str();
}

}  // namespace

nlohmann::json EvaluationEntry::to_json() const {
    nlohmann::json j{
        {"detector", detector},
        {"dataset", dataset},
        {"report", report.to_json()},
    };
    if (roc) {
        j["roc"] = metrics::roc_to_json(*roc);
    }
    return j;
}

EvaluationEntry EvaluationEntry::from_json(const nlohmann::json& j) {
    EvaluationEntry e;
    e.detector = j.at("detector").get<std::string>();
    e.dataset = j.at("dataset").get<std::string>();
    e.report = metrics::MetricsReport::from_json(j.at("report"));
    if (j.contains("roc")) {
        e.roc = metrics::roc_from_json(j.at("roc"));
    }
    return e;
}

EvaluationEntry EvaluationEntry::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open evaluation file: " + path.string());
    }
    return from_json(nlohmann::json::parse(in));
}

ReportBundle emit(const std::vector<EvaluationEntry>& evaluations,
                  const std::map<std::string, calibrate::CalibrationResult>& calibrations,
                  const std::filesystem::path& out_dir) {
    if (evaluations.empty()) {
        throw std::runtime_error("report: at least one evaluation is required");
    }
    std::filesystem::create_directories(out_dir);
    ReportBundle bundle;

    // Column set: the union of FPR targets across evaluations, sorted.
    std::set<double> fpr_targets;
    for (const auto& e : evaluations) {
        for (const auto& [target, op] : e.report.tpr_at_fpr) {
            fpr_targets.insert(target);
        }
    }

    bundle.summary_csv = out_dir / "summary.csv";
    {
        std::ofstream out(bundle.summary_csv, std::ios::binary);
        std::vector<std::string> header{"detector", "dataset", "auc"};
        for (double t : fpr_targets) {
            header.push_back("tpr_at_fpr_" + fmt(t, 2));
        }
        out << csv::join_row(header);
        for (const auto& e : evaluations) {
            std::vector<std::string> row{e.detector, e.dataset, fmt(e.report.auc)};
            for (double t : fpr_targets) {
                auto it = e.report.tpr_at_fpr.find(t);
                row.push_back(it == e.report.tpr_at_fpr.end() ? "" : fmt(it->second.tpr));
            }
            out << csv::join_row(row);
        }
    }

    // Per-language AUC matrix: rows dataset x detector,
    // columns the union of languages.
    std::set<std::string> languages;
    for (const auto& e : evaluations) {
        if (e.report.group_by == "language") {
            for (const auto& [lang, sub] : e.report.per_group) {
                languages.insert(lang);
            }
        }
    }
    if (languages.empty()) {
        bundle.notices.push_back(
            "per-language AUC matrix omitted: no evaluation carries language groups");
    } else {
        bundle.per_language_csv = out_dir / "per_language_auc.csv";
        std::ofstream out(*bundle.per_language_csv, std::ios::binary);
        std::vector<std::string> header{"dataset", "detector"};
        header.insert(header.end(), languages.begin(), languages.end());
        out << csv::join_row(header);
        for (const auto& e : evaluations) {
            std::vector<std::string> row{e.dataset, e.detector};
            for (const auto& lang : languages) {
                auto it = e.report.per_group.find(lang);
                row.push_back(it == e.report.per_group.end() || e.report.group_by != "language"
                                  ? ""
                                  : fmt(it->second.auc));
            }
            out << csv::join_row(row);
        }
    }

    // Calibrated-threshold table: per-dataset FNR/FPR/macro-F1 plus the average.
    if (!calibrations.empty()) {
        std::set<std::string> datasets;
        for (const auto& [detector, result] : calibrations) {
            for (const auto& [dataset, m] : result.per_dataset) {
                datasets.insert(dataset);
            }
        }
        bundle.calibration_csv = out_dir / "calibration.csv";
        std::ofstream out(*bundle.calibration_csv, std::ios::binary);
        std::vector<std::string> header{"detector", "threshold"};
        for (const auto& ds : datasets) {
            header.push_back(ds + "_fnr");
            header.push_back(ds + "_fpr");
            header.push_back(ds + "_macro_f1");
        }
        header.push_back("average_macro_f1");
        out << csv::join_row(header);
        for (const auto& [detector, result] : calibrations) {
            std::vector<std::string> row{detector, fmt(result.threshold, 3)};
            for (const auto& ds : datasets) {
                auto it = result.per_dataset.find(ds);
                if (it == result.per_dataset.end()) {
                    row.insert(row.end(), {"", "", ""});
                } else {
                    row.push_back(fmt(it->second.fnr, 3));
                    row.push_back(fmt(it->second.fpr, 3));
                    row.push_back(fmt(it->second.macro_f1, 3));
                }
            }
            row.push_back(fmt(result.average_macro_f1, 3));
            out << csv::join_row(row);
        }
    }

    // ROC point CSVs for external plotting, one per detector x dataset.
    bool missing_curves = false;
    for (const auto& e : evaluations) {
        if (!e.roc) {
            missing_curves = true;
            continue;
        }
        auto path = out_dir / ("roc_" + e.detector + "__" + e.dataset + ".csv");
        std::ofstream out(path, std::ios::binary);
        out << metrics::roc_csv(*e.roc);
        bundle.roc_csvs.push_back(path);
    }
    if (missing_curves) {
        bundle.notices.push_back("some evaluations lack ROC curves; their point CSVs were skipped");
    }

    bundle.report_json = out_dir / "report.json";
    {
        nlohmann::json evals = nlohmann::json::array();
        for (const auto& e : evaluations) {
            evals.push_back(e.to_json());
        }
        nlohmann::json calib = nlohmann::json::object();
        for (const auto& [detector, result] : calibrations) {
            calib[detector] = result.to_json();
        }
        std::ofstream out(bundle.report_json, std::ios::binary);
        out << nlohmann::json{{"evaluations", evals},
                              {"calibrations", calib},
                              {"notices", bundle.notices}}
                   .dump(2)
            << '\n';
    }
    return bundle;
}

}  // namespace mgtd::report
