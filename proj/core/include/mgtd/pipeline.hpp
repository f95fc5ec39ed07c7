#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace mgtd::pipeline {

// End-to-end pipeline description: named stages with their per-module
// configs, a global seed, an output root and a dataset registry. Stages not
// present in the file are simply not run.
struct PipelineConfig {
    std::uint64_t seed = 0;
    std::filesystem::path output_root;
    std::filesystem::path base_dir;  // directory of the config file
    std::map<std::string, std::filesystem::path> datasets;

    struct MixStage {
        std::string name;
        std::filesystem::path spec;
    };
    std::vector<MixStage> mixes;

    struct TrainStage {
        std::string name;
        std::string model;
        std::string train_ref;       // mix:<name> | dataset:<name> | path
        std::string validation_ref;  // mix:<name>:validation | ...
        std::optional<std::filesystem::path> config;
    };
    std::vector<TrainStage> trains;

    struct ScoreStage {
        std::string detector;
        std::string dataset;  // registry name or mix reference
        int batch_size = 32;
    };
    std::vector<ScoreStage> scores;

    struct EvaluateStage {
        std::vector<double> thresholds{0.5};
        std::vector<double> fpr_targets{0.05};
        std::optional<std::string> group_by;
    };
    std::optional<EvaluateStage> evaluate;

    struct CalibrateStage {
        std::vector<double> grid;  // empty = default grid
    };
    std::optional<CalibrateStage> calibrate;

    bool report = false;

    static PipelineConfig load(const std::filesystem::path& path);
    // Cross-stage reference checks; throws on dangling references.
    void validate() const;

    std::filesystem::path resolve_corpus_ref(const std::string& ref) const;
};

// Runs the requested stages in dependency order. A completed stage whose
// input digests are unchanged is skipped unless `force`. Returns 0 when all
// requested stages completed (or were skipped), 1 on a stage failure; the
// failing stage's manifest is named in the log.
int run_pipeline(const PipelineConfig& config, bool force, std::ostream& log);

}  // namespace mgtd::pipeline
