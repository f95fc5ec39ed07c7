#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mgtd/config_file.hpp"
#include "mgtd/metrics.hpp"
#include "mgtd/text_sample.hpp"

namespace mgtd::train {

enum class Regime { full, adapter_quantized };
enum class Precision { half, full32 };
enum class LossKind { cross_entropy, weighted_cross_entropy };
enum class CheckpointPolicy { best_macro_f1_at_half, best_auc, min_loss };

const char* to_string(Regime regime);
const char* to_string(Precision precision);
const char* to_string(CheckpointPolicy policy);

// Hyperparameters of a fine-tuning run. Optional fields default per regime:
//   full:             lr 2e-6, accumulation 1, eval every 2000 steps, half precision
//   adapter_quantized: lr 2e-5, accumulation 4, eval every 200 steps, full32
struct TrainConfig {
    std::optional<Regime> regime;  // auto-selected from model size when unset
    std::optional<double> learning_rate;
    int batch_size = 32;
    std::optional<int> gradient_accumulation;
    std::optional<int> eval_interval_steps;
    int max_epochs = 10;
    double max_wall_time_seconds = 4.0 * 86400.0;
    std::optional<Precision> precision;
    int adapter_rank = 64;
    double adapter_alpha = 16.0;
    double adapter_dropout = 0.1;
    int base_quantization_bits = 4;
    LossKind loss = LossKind::weighted_cross_entropy;
    std::optional<std::pair<double, double>> class_weights;  // (human, machine)
    std::optional<std::uint64_t> seed;
    double param_threshold_for_adapter = 2e9;
    CheckpointPolicy checkpoint_policy = CheckpointPolicy::best_macro_f1_at_half;
    double weight_decay = 0.0;
    // Memory ceiling on the per-step batch: when it forces a smaller batch,
    // accumulation is scaled up to preserve the effective batch size.
    std::optional<int> memory_max_batch_size;

    static TrainConfig from_config(const config::KeyValueFile& file);
    static TrainConfig load(const std::filesystem::path& path);
};

// Size-based regime choice: adapter_quantized iff the model has strictly
// more parameters than the threshold (default 2e9).
Regime select_regime(std::int64_t parameter_count, const TrainConfig& config);

// All defaults materialized; validates that a full-regime override is not
// applied to a model above the adapter threshold.
struct ResolvedTrainConfig {
    Regime regime = Regime::full;
    bool regime_overridden = false;
    double learning_rate = 2e-6;
    int batch_size = 32;
    int gradient_accumulation = 1;
    int eval_interval_steps = 2000;
    int max_epochs = 10;
    double max_wall_time_seconds = 4.0 * 86400.0;
    Precision precision = Precision::half;
    int adapter_rank = 64;
    double adapter_alpha = 16.0;
    double adapter_dropout = 0.1;
    int base_quantization_bits = 4;
    LossKind loss = LossKind::weighted_cross_entropy;
    std::pair<double, double> class_weights{1.0, 1.0};
    bool class_weights_from_corpus = false;
    std::uint64_t seed = 0;
    double param_threshold_for_adapter = 2e9;
    CheckpointPolicy checkpoint_policy = CheckpointPolicy::best_macro_f1_at_half;
    double weight_decay = 0.0;
    std::optional<std::string> batch_adjustment;  // set when memory ceiling rescaled

    int effective_batch_size() const { return batch_size * gradient_accumulation; }
    nlohmann::json to_json() const;
};

ResolvedTrainConfig resolve(const TrainConfig& config, std::int64_t parameter_count);

// Inverse-frequency weights with mean 1 when balanced:
//   weight(L) = total / (2 * count(L)), returned as (human, machine).
std::pair<double, double> compute_class_weights(const std::vector<TextSample>& corpus);

struct CheckpointRecord {
    std::int64_t step = 0;
    metrics::MetricsReport validation_metrics;
    double validation_loss = 0.0;
    std::string storage_ref;
    double wall_time_seconds = 0.0;
};

// Argmax (argmin for min_loss) over the policy scalar; ties break toward the
// earliest step. Pure function of the history.
CheckpointRecord select_checkpoint(const std::vector<CheckpointRecord>& history,
                                   CheckpointPolicy policy);
double checkpoint_score(const CheckpointRecord& record, CheckpointPolicy policy);

struct RunManifest {
    ResolvedTrainConfig config;
    std::string model_ref;
    std::string train_corpus_digest;
    std::string validation_corpus_digest;
    std::vector<CheckpointRecord> history;
    std::string best_checkpoint;  // storage_ref of the selected record
    std::string optimizer;        // adamw | paged_adamw
    std::int64_t parameter_count = 0;
    std::int64_t trainable_parameter_count = 0;
    std::int64_t total_steps = 0;
    nlohmann::json environment;

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
    static RunManifest load(const std::filesystem::path& run_dir);
};

// Fine-tunes `model_ref` (an instantiable preset name or a saved model
// directory) and writes `<out>/step_<N>/` checkpoints, a `<out>/best`
// reference and `<out>/manifest.json`. Validation runs every
// eval_interval_steps optimizer steps; the wall-time budget is checked at
// those boundaries.
RunManifest train(const std::string& model_ref, const std::filesystem::path& train_corpus,
                  const std::filesystem::path& validation_corpus, const TrainConfig& config,
                  const std::filesystem::path& out_dir, std::ostream* log = nullptr);

}  // namespace mgtd::train
