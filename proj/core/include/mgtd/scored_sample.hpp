#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mgtd/text_sample.hpp"

namespace mgtd {

// The interface between inference and evaluation: one score per sample,
// where `score` is the probability of the machine class.
struct ScoredSample {
    std::string id;
    Label label = Label::human;
    double score = 0.0;  // in [0, 1]
    std::string language;
    std::string generator;
    std::string dataset;

    nlohmann::json to_json() const;
};

// Reads a score file (JSON Lines: id, label, score, plus optional language /
// generator / dataset; extra fields are ignored). Lines without a label are
// an error here because metrics need ground truth. `default_dataset` fills
// the dataset field when the file does not carry one.
std::vector<ScoredSample> read_scores(const std::filesystem::path& path,
                                      const std::string& default_dataset = "");

void write_scores(const std::filesystem::path& path, const std::vector<ScoredSample>& scores);

}  // namespace mgtd
