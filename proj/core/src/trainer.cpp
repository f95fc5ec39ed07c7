#include "mgtd/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "mgtd/digest.hpp"
#include "mgtd/model.hpp"
#include "mgtd/nn.hpp"
#include "mgtd/random.hpp"

namespace mgtd::train {

namespace {

double parse_duration_seconds(const std::string& text) {
    if (text.empty()) {
        throw std::runtime_error("empty duration");
    }
    char unit = text.back();
    std::string number = text;
    double factor = 1.0;
    if (unit == 's' || unit == 'm' || unit == 'h' || unit == 'd') {
        number = text.substr(0, text.size() - 1);
        factor = unit == 's' ? 1.0 : unit == 'm' ? 60.0 : unit == 'h' ? 3600.0 : 86400.0;
    }
    std::size_t pos = 0;
    double value = std::stod(number, &pos);
    if (pos != number.size() || value < 0.0) {
        throw std::runtime_error("invalid duration: " + text);
    }
    return value * factor;
}

std::vector<int> labels_as_int(const std::vector<TextSample>& samples,
                               const std::vector<std::size_t>& order, std::size_t begin,
                               std::size_t end) {
    std::vector<int> out;
    out.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
        out.push_back(samples[order[i]].label == Label::machine ? 1 : 0);
    }
    return out;
}

}  // namespace

const char* to_string(Regime regime) {
    return regime == Regime::full ? "full" : "adapter_quantized";
}

const char* to_string(Precision precision) {
    return precision == Precision::half ? "half" : "full32";
}

const char* to_string(CheckpointPolicy policy) {
    switch (policy) {
        case CheckpointPolicy::best_macro_f1_at_half: return "best_macro_f1_at_half";
        case CheckpointPolicy::best_auc: return "best_auc";
        case CheckpointPolicy::min_loss: return "min_loss";
    }
    return "best_macro_f1_at_half";
}

TrainConfig TrainConfig::from_config(const config::KeyValueFile& file) {
    TrainConfig c;
    if (auto r = file.get("regime")) {
        if (*r == "full") {
            c.regime = Regime::full;
        } else if (*r == "adapter_quantized") {
            c.regime = Regime::adapter_quantized;
        } else if (*r != "auto") {
            throw std::runtime_error(file.origin() + ": unknown regime `" + *r + "`");
        }
    }
    if (auto v = file.get_double("learning_rate")) {
        c.learning_rate = *v;
    }
    if (auto v = file.get_int("batch_size")) {
        c.batch_size = static_cast<int>(*v);
    }
    if (auto v = file.get_int("gradient_accumulation")) {
        c.gradient_accumulation = static_cast<int>(*v);
    }
    if (auto v = file.get_int("eval_interval_steps")) {
        c.eval_interval_steps = static_cast<int>(*v);
    }
    if (auto v = file.get_int("max_epochs")) {
        c.max_epochs = static_cast<int>(*v);
    }
    if (auto v = file.get("max_wall_time")) {
        c.max_wall_time_seconds = parse_duration_seconds(*v);
    }
    if (auto v = file.get("precision")) {
        if (*v == "half") {
            c.precision = Precision::half;
        } else if (*v == "full32") {
            c.precision = Precision::full32;
        } else {
            throw std::runtime_error(file.origin() + ": unknown precision `" + *v + "`");
        }
    }
    if (auto v = file.get_int("adapter_rank")) {
        c.adapter_rank = static_cast<int>(*v);
    }
    if (auto v = file.get_double("adapter_alpha")) {
        c.adapter_alpha = *v;
    }
    if (auto v = file.get_double("adapter_dropout")) {
        c.adapter_dropout = *v;
    }
    if (auto v = file.get_int("base_quantization_bits")) {
        c.base_quantization_bits = static_cast<int>(*v);
    }
    if (auto v = file.get("loss")) {
        if (*v == "cross_entropy") {
            c.loss = LossKind::cross_entropy;
        } else if (*v == "weighted_cross_entropy") {
            c.loss = LossKind::weighted_cross_entropy;
        } else {
            throw std::runtime_error(file.origin() + ": unknown loss `" + *v + "`");
        }
    }
    if (auto v = file.get("class_weights")) {
        auto parts = config::split(*v, ',');
        if (parts.size() != 2) {
            throw std::runtime_error(file.origin() + ": class_weights must be `human,machine`");
        }
        c.class_weights = {std::stod(config::trim(parts[0])), std::stod(config::trim(parts[1]))};
    }
    if (auto v = file.get_uint("seed")) {
        c.seed = *v;
    }
    if (auto v = file.get_double("param_threshold_for_adapter")) {
        c.param_threshold_for_adapter = *v;
    }
    if (auto v = file.get("checkpoint_policy")) {
        if (*v == "best_macro_f1_at_half") {
            c.checkpoint_policy = CheckpointPolicy::best_macro_f1_at_half;
        } else if (*v == "best_auc") {
            c.checkpoint_policy = CheckpointPolicy::best_auc;
        } else if (*v == "min_loss") {
            c.checkpoint_policy = CheckpointPolicy::min_loss;
        } else {
            throw std::runtime_error(file.origin() + ": unknown checkpoint_policy `" + *v + "`");
        }
    }
    if (auto v = file.get_double("weight_decay")) {
        c.weight_decay = *v;
    }
    if (auto v = file.get_int("memory_max_batch_size")) {
        c.memory_max_batch_size = static_cast<int>(*v);
    }
    auto unused = file.unused_keys();
    if (!unused.empty()) {
        std::string joined;
        for (const auto& k : unused) {
            joined += joined.empty() ? k : ", " + k;
        }
        throw std::runtime_error(file.origin() + ": unknown keys: " + joined);
    }
    return c;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
    return from_config(config::KeyValueFile::parse_file(path.string()));
}

Regime select_regime(std::int64_t parameter_count, const TrainConfig& config) {
    if (parameter_count <= 0) {
        throw std::invalid_argument("select_regime: parameter_count must be positive");
    }
    return static_cast<double>(parameter_count) > config.param_threshold_for_adapter
               ? Regime::adapter_quantized
               : Regime::full;
}

ResolvedTrainConfig resolve(const TrainConfig& config, std::int64_t parameter_count) {
    ResolvedTrainConfig r;
    Regime by_size = select_regime(parameter_count, config);
    r.regime = config.regime.value_or(by_size);
    r.regime_overridden = config.regime.has_value() && *config.regime != by_size;
    if (r.regime == Regime::full &&
        static_cast<double>(parameter_count) > config.param_threshold_for_adapter) {
        throw std::runtime_error(
            "train config: the full regime is not allowed for models above the adapter "
            "threshold (" +
            std::to_string(parameter_count) + " parameters)");
    }
    bool adapter = r.regime == Regime::adapter_quantized;
    r.learning_rate = config.learning_rate.value_or(adapter ? 2e-5 : 2e-6);
    r.batch_size = config.batch_size;
    r.gradient_accumulation = config.gradient_accumulation.value_or(adapter ? 4 : 1);
    r.eval_interval_steps = config.eval_interval_steps.value_or(adapter ? 200 : 2000);
    r.max_epochs = config.max_epochs;
    r.max_wall_time_seconds = config.max_wall_time_seconds;
    r.precision = config.precision.value_or(adapter ? Precision::full32 : Precision::half);
    r.adapter_rank = config.adapter_rank;
    r.adapter_alpha = config.adapter_alpha;
    r.adapter_dropout = config.adapter_dropout;
    r.base_quantization_bits = config.base_quantization_bits;
    r.loss = config.loss;
    if (config.class_weights) {
        r.class_weights = *config.class_weights;
    }
    r.class_weights_from_corpus =
        !config.class_weights && config.loss == LossKind::weighted_cross_entropy;
    r.seed = config.seed.value_or(0);
    r.param_threshold_for_adapter = config.param_threshold_for_adapter;
    r.checkpoint_policy = config.checkpoint_policy;
    r.weight_decay = config.weight_decay;

    if (r.batch_size < 1 || r.gradient_accumulation < 1 || r.eval_interval_steps < 1 ||
        r.max_epochs < 1) {
        throw std::runtime_error("train config: batch_size, gradient_accumulation, "
                                 "eval_interval_steps and max_epochs must be >= 1");
    }
    if (config.memory_max_batch_size && *config.memory_max_batch_size < r.batch_size) {
        // Keep the effective batch size: shrink the batch by k, grow
        // accumulation by k.
        int k = (r.batch_size + *config.memory_max_batch_size - 1) /
                *config.memory_max_batch_size;
        int old_batch = r.batch_size;
        r.batch_size = (r.batch_size + k - 1) / k;
        r.gradient_accumulation *= k;
        r.batch_adjustment = "memory ceiling " + std::to_string(*config.memory_max_batch_size) +
                             ": batch " + std::to_string(old_batch) + " -> " +
                             std::to_string(r.batch_size) + ", accumulation x" +
                             std::to_string(k);
    }
    return r;
}

nlohmann::json ResolvedTrainConfig::to_json() const {
    nlohmann::json j{
        {"regime", to_string(regime)},
        {"regime_overridden", regime_overridden},
        {"learning_rate", learning_rate},
        {"batch_size", batch_size},
        {"gradient_accumulation", gradient_accumulation},
        {"effective_batch_size", effective_batch_size()},
        {"eval_interval_steps", eval_interval_steps},
        {"max_epochs", max_epochs},
        {"max_wall_time_seconds", max_wall_time_seconds},
        {"precision", to_string(precision)},
        {"adapter_rank", adapter_rank},
        {"adapter_alpha", adapter_alpha},
        {"adapter_dropout", adapter_dropout},
        {"base_quantization_bits", base_quantization_bits},
        {"loss", loss == LossKind::cross_entropy ? "cross_entropy" : "weighted_cross_entropy"},
        {"class_weights", {class_weights.first, class_weights.second}},
        {"class_weights_from_corpus", class_weights_from_corpus},
        {"seed", seed},
        {"param_threshold_for_adapter", param_threshold_for_adapter},
        {"checkpoint_policy", to_string(checkpoint_policy)},
        {"weight_decay", weight_decay},
    };
    if (batch_adjustment) {
        j["batch_adjustment"] = *batch_adjustment;
    }
    return j;
}

std::pair<double, double> compute_class_weights(const std::vector<TextSample>& corpus) {
    std::int64_t human = 0;
    std::int64_t machine = 0;
    for (const auto& s : corpus) {
        (s.label == Label::human ? human : machine)++;
    }
    if (human == 0 || machine == 0) {
        throw std::runtime_error("compute_class_weights: corpus lacks one of the labels");
    }
    double total = static_cast<double>(human + machine);
    return {total / (2.0 * static_cast<double>(human)),
            total / (2.0 * static_cast<double>(machine))};
}

double checkpoint_score(const CheckpointRecord& record, CheckpointPolicy policy) {
    switch (policy) {
        case CheckpointPolicy::best_auc:
            return record.validation_metrics.auc;
        case CheckpointPolicy::min_loss:
            return record.validation_loss;
        case CheckpointPolicy::best_macro_f1_at_half: {
            auto it = record.validation_metrics.threshold_metrics.find(0.5);
            if (it == record.validation_metrics.threshold_metrics.end()) {
                throw std::runtime_error("checkpoint record lacks threshold-0.5 metrics");
            }
            return it->second.macro_f1;
        }
    }
    throw std::logic_error("unknown checkpoint policy");
}

CheckpointRecord select_checkpoint(const std::vector<CheckpointRecord>& history,
                                   CheckpointPolicy policy) {
    if (history.empty()) {
        throw std::runtime_error("select_checkpoint: empty history");
    }
    const CheckpointRecord* best = &history.front();
    double best_score = checkpoint_score(*best, policy);
    for (const auto& record : history) {
        double s = checkpoint_score(record, policy);
        bool better = policy == CheckpointPolicy::min_loss ? s < best_score : s > best_score;
        if (better) {
            best = &record;
            best_score = s;
        }
    }
    return *best;
}

namespace {

nlohmann::json checkpoint_to_json(const CheckpointRecord& r) {
    return nlohmann::json{
        {"step", r.step},
        {"validation_metrics", r.validation_metrics.to_json()},
        {"validation_loss", r.validation_loss},
        {"storage_ref", r.storage_ref},
        {"wall_time_seconds", r.wall_time_seconds},
    };
}

CheckpointRecord checkpoint_from_json(const nlohmann::json& j) {
    CheckpointRecord r;
    r.step = j.at("step").get<std::int64_t>();
    r.validation_metrics = metrics::MetricsReport::from_json(j.at("validation_metrics"));
    r.validation_loss = j.at("validation_loss").get<double>();
    r.storage_ref = j.at("storage_ref").get<std::string>();
    r.wall_time_seconds = j.at("wall_time_seconds").get<double>();
    return r;
}

}  // namespace

nlohmann::json RunManifest::to_json() const {
    nlohmann::json history_json = nlohmann::json::array();
    for (const auto& record : history) {
        history_json.push_back(checkpoint_to_json(record));
    }
    return nlohmann::json{
        {"format", "mgtd-run-v1"},
        {"config", config.to_json()},
        {"model_ref", model_ref},
        {"train_corpus_digest", train_corpus_digest},
        {"validation_corpus_digest", validation_corpus_digest},
        {"history", history_json},
        {"best_checkpoint", best_checkpoint},
        {"optimizer", optimizer},
        {"parameter_count", parameter_count},
        {"trainable_parameter_count", trainable_parameter_count},
        {"total_steps", total_steps},
        {"environment", environment},
    };
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
    RunManifest m;
    const auto& c = j.at("config");
    m.config.regime = c.at("regime").get<std::string>() == "full" ? Regime::full
                                                                  : Regime::adapter_quantized;
    m.config.regime_overridden = c.at("regime_overridden").get<bool>();
    m.config.learning_rate = c.at("learning_rate").get<double>();
    m.config.batch_size = c.at("batch_size").get<int>();
    m.config.gradient_accumulation = c.at("gradient_accumulation").get<int>();
    m.config.eval_interval_steps = c.at("eval_interval_steps").get<int>();
    m.config.max_epochs = c.at("max_epochs").get<int>();
    m.config.max_wall_time_seconds = c.at("max_wall_time_seconds").get<double>();
    m.config.precision = c.at("precision").get<std::string>() == "half" ? Precision::half
                                                                        : Precision::full32;
    m.config.adapter_rank = c.at("adapter_rank").get<int>();
    m.config.adapter_alpha = c.at("adapter_alpha").get<double>();
    m.config.adapter_dropout = c.at("adapter_dropout").get<double>();
    m.config.base_quantization_bits = c.at("base_quantization_bits").get<int>();
    m.config.loss = c.at("loss").get<std::string>() == "cross_entropy"
                        ? LossKind::cross_entropy
                        : LossKind::weighted_cross_entropy;
    m.config.class_weights = {c.at("class_weights")[0].get<double>(),
                              c.at("class_weights")[1].get<double>()};
    m.config.class_weights_from_corpus = c.at("class_weights_from_corpus").get<bool>();
    m.config.seed = c.at("seed").get<std::uint64_t>();
    m.config.param_threshold_for_adapter = c.at("param_threshold_for_adapter").get<double>();
    auto policy = c.at("checkpoint_policy").get<std::string>();
    m.config.checkpoint_policy = policy == "best_auc"
                                     ? CheckpointPolicy::best_auc
                                     : policy == "min_loss" ? CheckpointPolicy::min_loss
                                                            : CheckpointPolicy::best_macro_f1_at_half;
    m.config.weight_decay = c.at("weight_decay").get<double>();
    if (c.contains("batch_adjustment")) {
        m.config.batch_adjustment = c.at("batch_adjustment").get<std::string>();
    }
    m.model_ref = j.at("model_ref").get<std::string>();
    m.train_corpus_digest = j.at("train_corpus_digest").get<std::string>();
    m.validation_corpus_digest = j.at("validation_corpus_digest").get<std::string>();
    for (const auto& record : j.at("history")) {
        m.history.push_back(checkpoint_from_json(record));
    }
    m.best_checkpoint = j.at("best_checkpoint").get<std::string>();
    m.optimizer = j.at("optimizer").get<std::string>();
    m.parameter_count = j.at("parameter_count").get<std::int64_t>();
    m.trainable_parameter_count = j.at("trainable_parameter_count").get<std::int64_t>();
    m.total_steps = j.at("total_steps").get<std::int64_t>();
    m.environment = j.at("environment");
    return m;
}

RunManifest RunManifest::load(const std::filesystem::path& run_dir) {
    std::ifstream in(run_dir / "manifest.json");
    if (!in) {
        throw std::runtime_error("no manifest.json in " + run_dir.string());
    }
    return from_json(nlohmann::json::parse(in));
}

namespace {

struct ValidationOutcome {
    metrics::MetricsReport report;
    double loss = 0.0;
};

ValidationOutcome validate_model(const model::TextClassifier& classifier,
                                 const std::vector<TextSample>& validation,
                                 const std::pair<double, double>& class_weights,
                                 int batch_size) {
    std::vector<std::string> texts;
    texts.reserve(validation.size());
    for (const auto& s : validation) {
        texts.push_back(s.text);
    }
    auto scores = classifier.score(texts, batch_size);
    std::vector<ScoredSample> scored;
    scored.reserve(validation.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < validation.size(); ++i) {
        ScoredSample s;
        s.id = validation[i].id;
        s.label = validation[i].label;
        s.score = scores[i];
        s.language = validation[i].language;
        s.generator = validation[i].generator;
        s.dataset = "validation";
        scored.push_back(std::move(s));
        double p = validation[i].label == Label::machine ? scores[i] : 1.0 - scores[i];
        double w = validation[i].label == Label::machine ? class_weights.second
                                                         : class_weights.first;
        loss += -w * std::log(std::max(p, 1e-30));
    }
    ValidationOutcome outcome;
    outcome.report = metrics::evaluate(scored, {0.5}, {0.05});
    outcome.loss = loss / static_cast<double>(validation.size());
    return outcome;
}

}  // namespace

RunManifest train(const std::string& model_ref, const std::filesystem::path& train_corpus,
                  const std::filesystem::path& validation_corpus, const TrainConfig& config,
                  const std::filesystem::path& out_dir, std::ostream* log) {
    auto t_start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    };
    auto say = [&](const std::string& msg) {
        if (log) {
            *log << "[train] " << msg << '\n';
        }
    };

    std::vector<TextSample> train_samples = read_corpus(train_corpus);
    std::vector<TextSample> validation_samples = read_corpus(validation_corpus);
    for (const auto* set : {&train_samples, &validation_samples}) {
        std::int64_t human = 0;
        std::int64_t machine = 0;
        for (const auto& s : *set) {
            (s.label == Label::human ? human : machine)++;
        }
        if (human == 0 || machine == 0) {
            throw std::runtime_error(std::string("train: ") +
                                     (set == &train_samples ? "train" : "validation") +
                                     " corpus lacks " + (human == 0 ? "human" : "machine") +
                                     " samples");
        }
    }

    model::TextClassifier classifier;
    const model::Preset* preset = model::find_preset(model_ref);
    if (preset) {
        classifier = model::TextClassifier::create(*preset, config.seed.value_or(0));
    } else if (std::filesystem::exists(std::filesystem::path(model_ref) / "model.json")) {
        classifier = model::TextClassifier::load(model_ref);
    } else {
        throw std::runtime_error("train: unknown model ref `" + model_ref +
                                 "` (not a preset, not a model directory)");
    }

    std::int64_t parameter_count = classifier.net().parameter_count();
    ResolvedTrainConfig resolved = resolve(config, parameter_count);
    if (resolved.class_weights_from_corpus) {
        resolved.class_weights = compute_class_weights(train_samples);
    }
    if (resolved.loss == LossKind::cross_entropy) {
        resolved.class_weights = {1.0, 1.0};
    }

    if (resolved.regime == Regime::adapter_quantized) {
        classifier.net().enable_adapters(resolved.adapter_rank,
                                         static_cast<float>(resolved.adapter_alpha),
                                         static_cast<float>(resolved.adapter_dropout),
                                         resolved.base_quantization_bits,
                                         rng::derive_seed(resolved.seed, "adapters"));
    }

    RunManifest manifest;
    manifest.config = resolved;
    manifest.model_ref = model_ref;
    manifest.train_corpus_digest = digest::sha256_file(train_corpus);
    manifest.validation_corpus_digest = digest::sha256_file(validation_corpus);
    manifest.optimizer = resolved.regime == Regime::adapter_quantized ? "paged_adamw" : "adamw";
    manifest.parameter_count = parameter_count;
    manifest.trainable_parameter_count = classifier.net().trainable_parameter_count();
    manifest.environment = nlohmann::json{
        {"platform", sizeof(void*) == 8 ? "64-bit" : "32-bit"},
        {"toolkit", "mgtd-0.1"},
    };

    nn::AdamWConfig opt_cfg;
    opt_cfg.lr = static_cast<float>(resolved.learning_rate);
    opt_cfg.weight_decay = static_cast<float>(resolved.weight_decay);
    nn::AdamW optimizer(opt_cfg);

    std::filesystem::create_directories(out_dir);
    rng::Prng dropout_rng(rng::derive_seed(resolved.seed, "dropout"));

    auto weight_human = static_cast<float>(resolved.class_weights.first);
    auto weight_machine = static_cast<float>(resolved.class_weights.second);

    std::int64_t step = 0;
    // Degenerate budgets stop before the first step; afterwards the budget
    // is only checked at validation boundaries.
    bool stop = elapsed() >= resolved.max_wall_time_seconds;
    std::int64_t last_checkpoint_step = -1;

    auto take_checkpoint = [&]() {
        auto outcome = validate_model(classifier, validation_samples, resolved.class_weights,
                                      resolved.batch_size);
        CheckpointRecord record;
        record.step = step;
        record.validation_metrics = std::move(outcome.report);
        record.validation_loss = outcome.loss;
        record.storage_ref = "step_" + std::to_string(step);
        record.wall_time_seconds = elapsed();
        std::filesystem::path ckpt_dir = out_dir / record.storage_ref;
        classifier.save(ckpt_dir);
        {
            std::ofstream mf(ckpt_dir / "metrics.json", std::ios::binary);
            mf << record.validation_metrics.to_json().dump(2) << '\n';
        }
        manifest.history.push_back(record);
        last_checkpoint_step = step;
        say("step " + std::to_string(step) + ": auc " +
            std::to_string(record.validation_metrics.auc) + ", val loss " +
            std::to_string(record.validation_loss));
    };

    for (int epoch = 0; epoch < resolved.max_epochs && !stop; ++epoch) {
        std::vector<std::size_t> order(train_samples.size());
        std::iota(order.begin(), order.end(), 0);
        rng::Prng shuffle_rng(
            rng::derive_seed(resolved.seed, "epoch|" + std::to_string(epoch)));
        rng::shuffle(order, shuffle_rng);

        std::size_t cursor = 0;
        while (cursor < order.size() && !stop) {
            classifier.net().zero_grads();
            double micro_loss_sum = 0.0;
            int micro_batches = 0;
            for (int acc = 0; acc < resolved.gradient_accumulation && cursor < order.size();
                 ++acc) {
                std::size_t end = std::min(order.size(),
                                           cursor + static_cast<std::size_t>(resolved.batch_size));
                std::vector<std::string> texts;
                texts.reserve(end - cursor);
                for (std::size_t i = cursor; i < end; ++i) {
                    texts.push_back(train_samples[order[i]].text);
                }
                nn::Matrix x = nn::featurize_batch(texts, classifier.featurizer());
                auto labels = labels_as_int(train_samples, order, cursor, end);
                double loss = classifier.net().loss_and_grad(
                    x, labels, weight_human, weight_machine,
                    resolved.regime == Regime::adapter_quantized ? &dropout_rng : nullptr);
                if (!std::isfinite(loss)) {
                    throw std::runtime_error("train: non-finite loss at optimizer step " +
                                             std::to_string(step + 1) + ", epoch " +
                                             std::to_string(epoch));
                }
                micro_loss_sum += loss;
                ++micro_batches;
                cursor = end;
            }
            if (micro_batches == 0) {
                break;
            }
            // Mean over the accumulated micro-batches.
            if (micro_batches > 1) {
                for (auto& ref : classifier.net().trainable_tensors()) {
                    *ref.grad /= static_cast<float>(micro_batches);
                }
            }
            optimizer.step(classifier.net().trainable_tensors());
            if (resolved.precision == Precision::half) {
                classifier.net().round_weights_to_half();
            }
            ++step;

            if (step % resolved.eval_interval_steps == 0) {
                take_checkpoint();
                if (elapsed() >= resolved.max_wall_time_seconds) {
                    say("wall-time budget reached at step " + std::to_string(step));
                    stop = true;
                }
            }
        }
    }

    manifest.total_steps = step;
    if (step > 0 && last_checkpoint_step != step) {
        take_checkpoint();
    }
    if (manifest.history.empty()) {
        throw std::runtime_error(
            "train: run produced no checkpoints (zero optimizer steps; wall-time or epoch "
            "budget exhausted before training)");
    }

    CheckpointRecord best = select_checkpoint(manifest.history, resolved.checkpoint_policy);
    manifest.best_checkpoint = best.storage_ref;
    {
        std::ofstream best_file(out_dir / "best", std::ios::binary);
        best_file << best.storage_ref << '\n';
    }
    {
        std::ofstream mf(out_dir / "manifest.json", std::ios::binary);
        mf << manifest.to_json().dump(2) << '\n';
    }
    say("done: " + std::to_string(step) + " steps, best " + best.storage_ref);
    return manifest;
}

}  // namespace mgtd::train
