#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mgtd/random.hpp"

namespace mgtd::nn {

using Matrix = Eigen::MatrixXf;

// Hashed byte n-gram featurizer: log-scaled counts of n-grams hashed into a
// fixed-size bucket space, L2-normalized. Deterministic across platforms.
struct FeaturizerConfig {
    int dim = 4096;
    int min_ngram = 1;
    int max_ngram = 3;
    int max_input_bytes = 2048;  // inputs beyond this are head-truncated
};

Eigen::VectorXf featurize(std::string_view text, const FeaturizerConfig& cfg,
                          bool* truncated = nullptr);
Matrix featurize_batch(std::span<const std::string> texts, const FeaturizerConfig& cfg,
                       std::vector<bool>* truncated = nullptr);

// Dense layer with an optional frozen base plus low-rank adapter:
//   y = x (W + scale * B A)^T + b
struct LinearLayer {
    Matrix w;  // out x in
    Matrix b;  // out x 1
    bool frozen_base = false;
    int lora_rank = 0;
    float lora_scale = 0.0f;
    float lora_dropout = 0.0f;
    Matrix lora_a;  // rank x in
    Matrix lora_b;  // out x rank

    // gradient buffers, shaped like their parameters
    Matrix gw, gb, ga, gb_lora;

    std::int64_t base_parameter_count() const { return w.size() + b.size(); }
    std::int64_t trainable_parameter_count() const;
    Matrix effective_weight() const;
};

struct MlpConfig {
    int feature_dim = 4096;
    int hidden_dim = 256;
    int hidden_layers = 2;  // number of ReLU-activated hidden layers, >= 1
};

struct TensorRef {
    std::string name;
    Matrix* value;
    Matrix* grad;
};

// Feed-forward classifier over hashed features. The classification head is
// zero-initialized so a fresh model is exactly uninformative (all scores
// 0.5) and fine-tuning shapes its ranking from the first step.
class Mlp {
public:
    Mlp() = default;
    Mlp(const MlpConfig& cfg, std::uint64_t seed);

    const MlpConfig& config() const { return cfg_; }

    // Logits, batch x 2 (column 0 human, column 1 machine).
    Matrix forward(const Matrix& x) const;

    // Weighted softmax cross-entropy (mean over the batch); accumulates
    // gradients into the layer buffers. dropout_rng enables adapter dropout
    // (training mode); pass nullptr for deterministic eval.
    double loss_and_grad(const Matrix& x, const std::vector<int>& labels, float weight_human,
                         float weight_machine, rng::Prng* dropout_rng);

    void zero_grads();

    // Switches to the adapter regime: base weights are frozen on the
    // quantization grid, rank-r adapters attach to every linear layer, and
    // the head stays fully trainable.
    void enable_adapters(int rank, float alpha, float dropout, int quant_bits,
                         std::uint64_t seed);
    bool adapters_enabled() const { return adapters_enabled_; }

    // Folds adapters into the base weights (deployment form).
    void merge_adapters();

    std::vector<TensorRef> trainable_tensors();
    std::int64_t parameter_count() const;
    std::int64_t trainable_parameter_count() const;

    // Rounds every trainable weight to the nearest binary16 value.
    void round_weights_to_half();

    void save_weights(std::ostream& out) const;
    void load_weights(std::istream& in);

    std::vector<LinearLayer>& layers() { return layers_; }
    const std::vector<LinearLayer>& layers() const { return layers_; }

private:
    MlpConfig cfg_;
    std::vector<LinearLayer> layers_;
    bool adapters_enabled_ = false;
};

struct AdamWConfig {
    float lr = 1e-3f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
    float weight_decay = 0.0f;
};

// Adaptive moment estimation with decoupled weight decay. The paged variant
// used in the adapter regime differs only in accelerator memory management,
// so the update math here serves both; the manifest records which name ran.
class AdamW {
public:
    explicit AdamW(const AdamWConfig& cfg) : cfg_(cfg) {}

    void step(const std::vector<TensorRef>& tensors);
    std::int64_t steps_taken() const { return t_; }

private:
    AdamWConfig cfg_;
    std::int64_t t_ = 0;
    std::map<std::string, std::pair<Matrix, Matrix>> state_;  // name -> (m, v)
};

// Symmetric absmax quantize-dequantize on a fixed block size, in place.
void quantize_dequantize(Matrix& w, int bits, int block_size = 64);

// Standard normal via Box-Muller on the portable generator.
float gaussian(rng::Prng& prng);

void write_tensors(std::ostream& out,
                   const std::vector<std::pair<std::string, const Matrix*>>& tensors);
std::map<std::string, Matrix> read_tensors(std::istream& in);

}  // namespace mgtd::nn
