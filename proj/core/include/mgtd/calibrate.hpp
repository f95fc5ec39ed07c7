#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "mgtd/metrics.hpp"

namespace mgtd::calibrate {

struct DatasetMetrics {
    double fnr = 0.0;
    double fpr = 0.0;
    double macro_f1 = 0.0;
};

struct CalibrationResult {
    double threshold = 0.0;                          // argmax over the grid
    std::map<std::string, DatasetMetrics> per_dataset;  // at the chosen threshold
    double average_macro_f1 = 0.0;                   // plain mean over datasets
    std::vector<double> grid;                        // candidates, ascending
    std::vector<double> grid_average_macro_f1;       // aligned with grid

    nlohmann::json to_json() const;
};

// Picks the single threshold maximizing the equal-weight mean of per-dataset
// macro F1; ties break toward the lowest threshold. Throws when a dataset
// contains only one label (naming it) or the grid is empty.
CalibrationResult calibrate(const std::map<std::string, std::vector<ScoredSample>>& scored_by_dataset,
                            std::vector<double> grid);

// {0.05, 0.10, ..., 0.95} plus {0.96, 0.97, 0.98, 0.99, 0.995, 0.999}:
// a fixed 25-point grid covering every reported operating threshold.
std::vector<double> default_grid();

}  // namespace mgtd::calibrate
