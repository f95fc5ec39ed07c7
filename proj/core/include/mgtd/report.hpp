#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mgtd/calibrate.hpp"
#include "mgtd/metrics.hpp"

namespace mgtd::report {

// One detector x dataset evaluation, as persisted by the evaluate stage.
// Carries the ROC curve so reports can re-emit plot data without the
// original score files.
struct EvaluationEntry {
    std::string detector;
    std::string dataset;
    metrics::MetricsReport report;
    std::optional<metrics::RocCurve> roc;

    nlohmann::json to_json() const;
    static EvaluationEntry from_json(const nlohmann::json& j);
    static EvaluationEntry load(const std::filesystem::path& path);
};

struct ReportBundle {
    std::filesystem::path summary_csv;                   // detector x dataset AUC / TPR@FPR
    std::optional<std::filesystem::path> per_language_csv;  // per-language AUC matrix
    std::optional<std::filesystem::path> calibration_csv;   // threshold table
    std::vector<std::filesystem::path> roc_csvs;         // per detector x dataset
    std::filesystem::path report_json;
    std::vector<std::string> notices;
};

// Reshapes persisted evaluations (plus optional per-detector calibration
// results) into the summary tables. Every number comes from the inputs; the
// per-language matrix is omitted with a notice when no evaluation carries
// language groups.
ReportBundle emit(const std::vector<EvaluationEntry>& evaluations,
                  const std::map<std::string, calibrate::CalibrationResult>& calibrations,
                  const std::filesystem::path& out_dir);

}  // namespace mgtd::report
