#include "mgtd/inference.hpp"

#include <fstream>

#include <json.hpp>

#include "mgtd/metrics.hpp"

namespace mgtd::infer {

DetectorBundle load_bundle(const std::filesystem::path& path) {
    std::filesystem::path dir = path;
    // A run directory points at its selected checkpoint via `best`.
    if (std::filesystem::exists(dir / "best")) {
        std::ifstream best(dir / "best");
        std::string ref;
        std::getline(best, ref);
        if (ref.empty()) {
            throw std::runtime_error("empty best-checkpoint reference in " + dir.string());
        }
        dir /= ref;
    }
    DetectorBundle bundle;
    bundle.dir = dir;
    bundle.classifier = model::TextClassifier::load(dir);
    bundle.max_input_bytes = bundle.classifier.featurizer().max_input_bytes;
    std::ifstream meta(dir / "bundle.json");
    if (meta) {
        nlohmann::json j = nlohmann::json::parse(meta);
        if (j.contains("calibrated_threshold") && j["calibrated_threshold"].is_number()) {
            double t = j["calibrated_threshold"].get<double>();
            if (t < 0.0 || t > 1.0) {
                throw std::runtime_error("bundle.json threshold outside [0, 1] in " +
                                         dir.string());
            }
            bundle.calibrated_threshold = t;
        }
        bundle.manifest_digest = j.value("manifest_digest", "");
    }
    return bundle;
}

void write_bundle_metadata(const std::filesystem::path& bundle_dir,
                           std::optional<double> calibrated_threshold,
                           const std::string& manifest_digest) {
    nlohmann::json j = nlohmann::json::object();
    if (calibrated_threshold) {
        if (*calibrated_threshold < 0.0 || *calibrated_threshold > 1.0) {
            throw std::runtime_error("calibrated threshold outside [0, 1]");
        }
        j["calibrated_threshold"] = *calibrated_threshold;
    }
    if (!manifest_digest.empty()) {
        j["manifest_digest"] = manifest_digest;
    }
    std::ofstream out(bundle_dir / "bundle.json", std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write bundle.json in " + bundle_dir.string());
    }
    out << j.dump(2) << '\n';
}

TextScores score_texts(const DetectorBundle& bundle, std::span<const std::string> texts,
                       int batch_size) {
    TextScores out;
    out.scores = bundle.classifier.score(texts, batch_size, &out.truncated);
    return out;
}

std::vector<ScoredSample> score_corpus(const DetectorBundle& bundle,
                                       const std::vector<TextSample>& samples, int batch_size,
                                       const std::string& dataset,
                                       std::vector<bool>* truncated) {
    std::vector<std::string> texts;
    texts.reserve(samples.size());
    for (const auto& s : samples) {
        texts.push_back(s.text);
    }
    std::vector<bool> trunc;
    auto scores = bundle.classifier.score(texts, batch_size, &trunc);
    if (truncated) {
        *truncated = trunc;
    }
    std::vector<ScoredSample> out;
    out.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        ScoredSample s;
        s.id = samples[i].id;
        s.label = samples[i].label;
        s.score = scores[i];
        s.language = samples[i].language;
        s.generator = samples[i].generator;
        s.dataset = dataset;
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<Label> classify(std::span<const ScoredSample> scored, double threshold) {
    if (threshold < 0.0 || threshold > 1.0) {
        throw std::invalid_argument("classify: threshold must lie in [0, 1]");
    }
    std::vector<Label> out;
    out.reserve(scored.size());
    for (const auto& s : scored) {
        out.push_back(metrics::predict_machine(s.score, threshold) ? Label::machine
                                                                   : Label::human);
    }
    return out;
}

}  // namespace mgtd::infer
