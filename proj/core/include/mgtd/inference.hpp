#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mgtd/model.hpp"
#include "mgtd/scored_sample.hpp"
#include "mgtd/text_sample.hpp"

namespace mgtd::infer {

// A trained detector ready for batch scoring: a model checkpoint plus
// optional calibrated threshold and provenance metadata (bundle.json).
struct DetectorBundle {
    std::filesystem::path dir;  // resolved checkpoint directory
    model::TextClassifier classifier;
    std::optional<double> calibrated_threshold;
    std::string manifest_digest;
    int max_input_bytes = 0;
};

// Accepts either a checkpoint directory or a run directory (resolved through
// its `best` reference).
DetectorBundle load_bundle(const std::filesystem::path& path);

// Writes/updates bundle.json next to the checkpoint.
void write_bundle_metadata(const std::filesystem::path& bundle_dir,
                           std::optional<double> calibrated_threshold,
                           const std::string& manifest_digest = "");

struct TextScores {
    std::vector<double> scores;    // machine-class probability, order-aligned
    std::vector<bool> truncated;   // inputs cut at the model's max length
};

TextScores score_texts(const DetectorBundle& bundle, std::span<const std::string> texts,
                       int batch_size);

// Scores labeled samples, carrying provenance through to ScoredSamples so
// the output feeds metrics/calibrate directly.
std::vector<ScoredSample> score_corpus(const DetectorBundle& bundle,
                                       const std::vector<TextSample>& samples, int batch_size,
                                       const std::string& dataset,
                                       std::vector<bool>* truncated = nullptr);

// Hard labels at a threshold; same tie rule as the metrics module
// (machine iff score >= threshold).
std::vector<Label> classify(std::span<const ScoredSample> scored, double threshold);

}  // namespace mgtd::infer
