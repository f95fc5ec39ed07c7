#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mgtd/nn.hpp"

namespace mgtd::model {

// Shape summary of a transformer sufficient for parameter accounting:
// regime selection by size and the adapter-regime trainable fraction.
struct RefArch {
    std::int64_t vocab_size = 0;
    std::int64_t hidden = 0;
    std::int64_t layers = 0;
    std::int64_t q_dim = 0;   // query/output projection width
    std::int64_t kv_dim = 0;  // key/value projection width (grouped-query attention)
    std::int64_t intermediate = 0;
    bool gated_mlp = true;        // gate/up/down versus in/out
    bool tied_embeddings = true;  // untied models carry a separate output embedding

    std::int64_t parameter_count() const;
    // Rank-r adapters on every linear module plus a fully trainable
    // two-way classification head.
    std::int64_t adapter_trainable_count(int rank) const;
};

struct Preset {
    std::string name;
    bool instantiable = false;  // reference presets exist for accounting only
    nn::FeaturizerConfig featurizer;
    nn::MlpConfig net;
    std::optional<RefArch> arch;

    std::int64_t parameter_count() const;
    std::int64_t adapter_trainable_count(int rank) const;
};

// Registry: desk-scale trainable presets plus reference shapes of
// well-known public checkpoint families, kept for parameter accounting.
const std::vector<Preset>& presets();
const Preset* find_preset(const std::string& name);

// A trainable/scorable detector: hashed n-gram featurizer plus MLP.
class TextClassifier {
public:
    TextClassifier() = default;

    static TextClassifier create(const Preset& preset, std::uint64_t seed);
    static TextClassifier load(const std::filesystem::path& dir);
    // Writes model.json + weights.bin. Adapters, if any, are folded into the
    // saved weights (deployment form); the live model is left untouched.
    void save(const std::filesystem::path& dir) const;

    // Machine-class probability per text, order-aligned with the input.
    std::vector<double> score(std::span<const std::string> texts, int batch_size,
                              std::vector<bool>* truncated = nullptr) const;

    const std::string& preset_name() const { return preset_name_; }
    const nn::FeaturizerConfig& featurizer() const { return featurizer_; }
    nn::Mlp& net() { return net_; }
    const nn::Mlp& net() const { return net_; }

private:
    std::string preset_name_;
    nn::FeaturizerConfig featurizer_;
    nn::Mlp net_;
};

}  // namespace mgtd::model
