#include "mgtd/model.hpp"

#include <fstream>
#include <stdexcept>

namespace mgtd::model {

std::int64_t RefArch::parameter_count() const {
    std::int64_t embeddings = vocab_size * hidden * (tied_embeddings ? 1 : 2);
    std::int64_t attention = hidden * q_dim + 2 * hidden * kv_dim + q_dim * hidden;
    std::int64_t mlp = (gated_mlp ? 3 : 2) * hidden * intermediate;
    std::int64_t norms = 2 * hidden;
    return embeddings + layers * (attention + mlp + norms) + hidden;
}

std::int64_t RefArch::adapter_trainable_count(int rank) const {
    std::int64_t r = rank;
    std::int64_t per_layer = r * (hidden + q_dim)        // q projection
                             + 2 * r * (hidden + kv_dim) // k, v projections
                             + r * (q_dim + hidden);     // output projection
    if (gated_mlp) {
        per_layer += 2 * r * (hidden + intermediate) + r * (intermediate + hidden);
    } else {
        per_layer += r * (hidden + intermediate) + r * (intermediate + hidden);
    }
    std::int64_t head = hidden * 2 + 2;
    return layers * per_layer + head;
}

std::int64_t Preset::parameter_count() const {
    if (arch) {
        return arch->parameter_count();
    }
    std::int64_t n = 0;
    std::int64_t in = net.feature_dim;
    for (int l = 0; l < net.hidden_layers; ++l) {
        n += in * net.hidden_dim + net.hidden_dim;
        in = net.hidden_dim;
    }
    n += in * 2 + 2;
    return n;
}

std::int64_t Preset::adapter_trainable_count(int rank) const {
    if (arch) {
        return arch->adapter_trainable_count(rank);
    }
    std::int64_t n = 0;
    std::int64_t in = net.feature_dim;
    for (int l = 0; l < net.hidden_layers; ++l) {
        n += static_cast<std::int64_t>(rank) * (in + net.hidden_dim);
        in = net.hidden_dim;
    }
    n += in * 2 + 2;  // head stays fully trainable
    return n;
}

const std::vector<Preset>& presets() {
    static const std::vector<Preset> registry = [] {
        std::vector<Preset> list;

        Preset tiny;
        tiny.name = "tiny-ff-v1";
        tiny.instantiable = true;
        tiny.featurizer = {.dim = 4096, .min_ngram = 1, .max_ngram = 3, .max_input_bytes = 2048};
        tiny.net = {.feature_dim = 4096, .hidden_dim = 256, .hidden_layers = 2};
        list.push_back(tiny);

        Preset mini;
        mini.name = "tiny-ff-mini";
        mini.instantiable = true;
        mini.featurizer = {.dim = 512, .min_ngram = 1, .max_ngram = 3, .max_input_bytes = 1024};
        mini.net = {.feature_dim = 512, .hidden_dim = 32, .hidden_layers = 1};
        list.push_back(mini);

        auto reference = [&](std::string name, RefArch arch) {
            Preset p;
            p.name = std::move(name);
            p.instantiable = false;
            p.arch = arch;
            list.push_back(p);
        };
        reference("gemma-2-9b-it",
                  {.vocab_size = 256000, .hidden = 3584, .layers = 42, .q_dim = 4096,
                   .kv_dim = 2048, .intermediate = 14336, .gated_mlp = true,
                   .tied_embeddings = true});
        reference("qwen2-0.5b",
                  {.vocab_size = 151936, .hidden = 896, .layers = 24, .q_dim = 896,
                   .kv_dim = 128, .intermediate = 4864, .gated_mlp = true,
                   .tied_embeddings = true});
        reference("qwen2-1.5b",
                  {.vocab_size = 151936, .hidden = 1536, .layers = 28, .q_dim = 1536,
                   .kv_dim = 256, .intermediate = 8960, .gated_mlp = true,
                   .tied_embeddings = true});
        reference("yi-1.5-6b",
                  {.vocab_size = 64000, .hidden = 4096, .layers = 32, .q_dim = 4096,
                   .kv_dim = 512, .intermediate = 11008, .gated_mlp = true,
                   .tied_embeddings = false});
        RefArch mdeberta{.vocab_size = 251000, .hidden = 768, .layers = 12, .q_dim = 768,
                         .kv_dim = 768, .intermediate = 3072, .gated_mlp = false,
                         .tied_embeddings = true};
        reference("mdeberta-v3-base", mdeberta);
        // The baseline shares the architecture; it differs in training data.
        reference("mdeberta-v3-base-baseline", mdeberta);
        return list;
    }();
    return registry;
}

const Preset* find_preset(const std::string& name) {
    for (const auto& p : presets()) {
        if (p.name == name) {
            return &p;
        }
    }
    return nullptr;
}

TextClassifier TextClassifier::create(const Preset& preset, std::uint64_t seed) {
    if (!preset.instantiable) {
        throw std::runtime_error("preset `" + preset.name +
                                 "` is a reference architecture; it documents parameter "
                                 "accounting and cannot be instantiated at desk scale");
    }
    TextClassifier c;
    c.preset_name_ = preset.name;
    c.featurizer_ = preset.featurizer;
    c.net_ = nn::Mlp(preset.net, seed);
    return c;
}

void TextClassifier::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    nlohmann::json j{
        {"format", "mgtd-model-v1"},
        {"preset", preset_name_},
        {"featurizer",
         {{"dim", featurizer_.dim},
          {"min_ngram", featurizer_.min_ngram},
          {"max_ngram", featurizer_.max_ngram},
          {"max_input_bytes", featurizer_.max_input_bytes}}},
        {"net",
         {{"feature_dim", net_.config().feature_dim},
          {"hidden_dim", net_.config().hidden_dim},
          {"hidden_layers", net_.config().hidden_layers}}},
    };
    {
        std::ofstream out(dir / "model.json", std::ios::binary);
        if (!out) {
            throw std::runtime_error("cannot write " + (dir / "model.json").string());
        }
        out << j.dump(2) << '\n';
    }
    std::ofstream weights(dir / "weights.bin", std::ios::binary);
    if (!weights) {
        throw std::runtime_error("cannot write " + (dir / "weights.bin").string());
    }
    if (net_.adapters_enabled()) {
        nn::Mlp merged = net_;
        merged.merge_adapters();
        merged.save_weights(weights);
    } else {
        net_.save_weights(weights);
    }
}

TextClassifier TextClassifier::load(const std::filesystem::path& dir) {
    std::ifstream in(dir / "model.json");
    if (!in) {
        throw std::runtime_error("not a model directory (no model.json): " + dir.string());
    }
    nlohmann::json j = nlohmann::json::parse(in);
    if (j.value("format", "") != "mgtd-model-v1") {
        throw std::runtime_error("unsupported model format in " + dir.string());
    }
    TextClassifier c;
    c.preset_name_ = j.value("preset", "");
    const auto& f = j.at("featurizer");
    c.featurizer_ = {f.at("dim").get<int>(), f.at("min_ngram").get<int>(),
                     f.at("max_ngram").get<int>(), f.at("max_input_bytes").get<int>()};
    const auto& n = j.at("net");
    nn::MlpConfig cfg{n.at("feature_dim").get<int>(), n.at("hidden_dim").get<int>(),
                      n.at("hidden_layers").get<int>()};
    c.net_ = nn::Mlp(cfg, 0);
    std::ifstream weights(dir / "weights.bin", std::ios::binary);
    if (!weights) {
        throw std::runtime_error("missing weights.bin in " + dir.string());
    }
    c.net_.load_weights(weights);
    return c;
}

std::vector<double> TextClassifier::score(std::span<const std::string> texts, int batch_size,
                                          std::vector<bool>* truncated) const {
    if (batch_size < 1) {
        throw std::invalid_argument("score: batch_size must be >= 1");
    }
    std::vector<double> scores;
    scores.reserve(texts.size());
    if (truncated) {
        truncated->assign(texts.size(), false);
    }
    for (std::size_t start = 0; start < texts.size();
         start += static_cast<std::size_t>(batch_size)) {
        std::size_t count = std::min(texts.size() - start, static_cast<std::size_t>(batch_size));
        std::vector<bool> batch_truncated;
        nn::Matrix x = nn::featurize_batch(texts.subspan(start, count), featurizer_,
                                           truncated ? &batch_truncated : nullptr);
        nn::Matrix logits = net_.forward(x);
        for (Eigen::Index i = 0; i < logits.rows(); ++i) {
            // Two-class softmax; the machine column is index 1.
            double m = std::max(logits(i, 0), logits(i, 1));
            double e0 = std::exp(static_cast<double>(logits(i, 0)) - m);
            double e1 = std::exp(static_cast<double>(logits(i, 1)) - m);
            scores.push_back(e1 / (e0 + e1));
        }
        if (truncated) {
            for (std::size_t i = 0; i < count; ++i) {
                (*truncated)[start + i] = batch_truncated[i];
            }
        }
    }
    return scores;
}

}  // namespace mgtd::model
