#include "mgtd/calibrate.hpp"

#include <algorithm>
#include <stdexcept>

namespace mgtd::calibrate {

std::vector<double> default_grid() {
    std::vector<double> grid;
    for (int i = 5; i <= 95; i += 5) {
        grid.push_back(i / 100.0);
    }
    for (int i : {960, 970, 980, 990, 995, 999}) {
        grid.push_back(i / 1000.0);
    }
    return grid;
}

CalibrationResult calibrate(
    const std::map<std::string, std::vector<ScoredSample>>& scored_by_dataset,
    std::vector<double> grid) {
    if (scored_by_dataset.empty()) {
        throw std::runtime_error("calibrate: no datasets");
    }
    if (grid.empty()) {
        throw std::runtime_error("calibrate: empty threshold grid");
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    for (double t : grid) {
        if (!(t >= 0.0 && t <= 1.1)) {
            throw std::runtime_error("calibrate: grid threshold out of range: " +
                                     std::to_string(t));
        }
    }
    for (const auto& [name, scored] : scored_by_dataset) {
        bool has_human = std::any_of(scored.begin(), scored.end(),
                                     [](const auto& s) { return s.label == Label::human; });
        bool has_machine = std::any_of(scored.begin(), scored.end(),
                                       [](const auto& s) { return s.label == Label::machine; });
        if (!has_human || !has_machine) {
            throw std::runtime_error("calibrate: dataset `" + name +
                                     "` contains only one label");
        }
    }

    CalibrationResult result;
    result.grid = grid;
    result.grid_average_macro_f1.reserve(grid.size());

    std::size_t best_index = 0;
    double best_average = -1.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double sum = 0.0;
        for (const auto& [name, scored] : scored_by_dataset) {
            sum += metrics::macro_f1(metrics::confusion(scored, grid[i]));
        }
        double average = sum / static_cast<double>(scored_by_dataset.size());
        result.grid_average_macro_f1.push_back(average);
        // Strict > keeps the lowest threshold on ties (grid is ascending).
        if (average > best_average) {
            best_average = average;
            best_index = i;
        }
    }

    result.threshold = grid[best_index];
    result.average_macro_f1 = best_average;
    for (const auto& [name, scored] : scored_by_dataset) {
        auto counts = metrics::confusion(scored, result.threshold);
        result.per_dataset[name] = {metrics::fnr(counts), metrics::fpr(counts),
                                    metrics::macro_f1(counts)};
    }
    return result;
}

nlohmann::json CalibrationResult::to_json() const {
    nlohmann::json per_ds = nlohmann::json::object();
    for (const auto& [name, m] : per_dataset) {
        per_ds[name] = {{"fnr", m.fnr}, {"fpr", m.fpr}, {"macro_f1", m.macro_f1}};
    }
    return nlohmann::json{
        {"threshold", threshold},
        {"per_dataset", per_ds},
        {"average_macro_f1", average_macro_f1},
        {"grid", grid},
        {"grid_average_macro_f1", grid_average_macro_f1},
    };
}

}  // namespace mgtd::calibrate
