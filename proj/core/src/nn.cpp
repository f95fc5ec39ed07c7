#include "mgtd/nn.hpp"

#include <Eigen/Core>

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace mgtd::nn {

namespace {

// FNV-1a over an n-gram window; bucket index plus a sign bit so hash
// collisions partially cancel instead of piling up.
inline std::uint64_t window_hash(const char* data, int n) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (int i = 0; i < n; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

Eigen::VectorXf featurize(std::string_view text, const FeaturizerConfig& cfg, bool* truncated) {
    if (truncated) {
        *truncated = text.size() > static_cast<std::size_t>(cfg.max_input_bytes);
    }
    if (text.size() > static_cast<std::size_t>(cfg.max_input_bytes)) {
        text = text.substr(0, static_cast<std::size_t>(cfg.max_input_bytes));
    }
    Eigen::VectorXf counts = Eigen::VectorXf::Zero(cfg.dim);
    const auto len = static_cast<int>(text.size());
    for (int n = cfg.min_ngram; n <= cfg.max_ngram; ++n) {
        for (int i = 0; i + n <= len; ++i) {
            std::uint64_t h = window_hash(text.data() + i, n);
            auto bucket = static_cast<Eigen::Index>((h >> 1) % static_cast<std::uint64_t>(cfg.dim));
            counts[bucket] += (h & 1) ? 1.0f : -1.0f;
        }
    }
    Eigen::VectorXf features = counts.array().sign() * (counts.array().abs() + 1.0f).log();
    float norm = features.norm();
    if (norm > 0.0f) {
        features /= norm;
    }
    return features;
}

Matrix featurize_batch(std::span<const std::string> texts, const FeaturizerConfig& cfg,
                       std::vector<bool>* truncated) {
    Matrix x(static_cast<Eigen::Index>(texts.size()), cfg.dim);
    if (truncated) {
        truncated->assign(texts.size(), false);
    }
    for (std::size_t i = 0; i < texts.size(); ++i) {
        bool t = false;
        x.row(static_cast<Eigen::Index>(i)) = featurize(texts[i], cfg, &t).transpose();
        if (truncated) {
            (*truncated)[i] = t;
        }
    }
    return x;
}

std::int64_t LinearLayer::trainable_parameter_count() const {
    std::int64_t n = 0;
    if (!frozen_base) {
        n += base_parameter_count();
    }
    if (lora_rank > 0) {
        n += lora_a.size() + lora_b.size();
    }
    return n;
}

Matrix LinearLayer::effective_weight() const {
    if (lora_rank > 0) {
        return w + lora_scale * (lora_b * lora_a);
    }
    return w;
}

float gaussian(rng::Prng& prng) {
    // Box-Muller; 1-u keeps the log argument in (0, 1].
    double u = 1.0 - prng.unit();
    double v = prng.unit();
    return static_cast<float>(std::sqrt(-2.0 * std::log(u)) *
                              std::cos(2.0 * 3.14159265358979323846 * v));
}

Mlp::Mlp(const MlpConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    if (cfg.hidden_layers < 1) {
        throw std::invalid_argument("Mlp: hidden_layers must be >= 1");
    }
    rng::Prng prng(rng::derive_seed(seed, "mlp_init"));
    auto make_layer = [&](int in, int out, bool zero) {
        LinearLayer layer;
        layer.w = Matrix(out, in);
        if (zero) {
            layer.w.setZero();
        } else {
            float std_dev = 1.0f / std::sqrt(static_cast<float>(in));
            for (Eigen::Index j = 0; j < layer.w.cols(); ++j) {
                for (Eigen::Index i = 0; i < layer.w.rows(); ++i) {
                    layer.w(i, j) = std_dev * gaussian(prng);
                }
            }
        }
        layer.b = Matrix::Zero(out, 1);
        return layer;
    };
    layers_.push_back(make_layer(cfg.feature_dim, cfg.hidden_dim, false));
    for (int i = 1; i < cfg.hidden_layers; ++i) {
        layers_.push_back(make_layer(cfg.hidden_dim, cfg.hidden_dim, false));
    }
    layers_.push_back(make_layer(cfg.hidden_dim, 2, true));  // zero-init head
}

Matrix Mlp::forward(const Matrix& x) const {
    Matrix h = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& layer = layers_[l];
        Matrix z = h * layer.effective_weight().transpose();
        z.rowwise() += layer.b.col(0).transpose();
        if (l + 1 < layers_.size()) {
            h = z.cwiseMax(0.0f);
        } else {
            h = std::move(z);
        }
    }
    return h;
}

double Mlp::loss_and_grad(const Matrix& x, const std::vector<int>& labels, float weight_human,
                          float weight_machine, rng::Prng* dropout_rng) {
    const auto batch = x.rows();
    if (batch != static_cast<Eigen::Index>(labels.size())) {
        throw std::invalid_argument("loss_and_grad: batch size mismatch");
    }

    // Forward, keeping what backprop needs.
    std::vector<Matrix> inputs(layers_.size());       // layer input
    std::vector<Matrix> dropped(layers_.size());      // adapter-path input
    std::vector<Matrix> lora_mid(layers_.size());     // x_dropped * A^T
    std::vector<Matrix> preact(layers_.size());
    Matrix h = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        auto& layer = layers_[l];
        inputs[l] = h;
        Matrix z = h * layer.w.transpose();
        if (layer.lora_rank > 0) {
            Matrix xd = h;
            if (layer.lora_dropout > 0.0f && dropout_rng) {
                float keep = 1.0f - layer.lora_dropout;
                for (Eigen::Index c = 0; c < xd.cols(); ++c) {
                    for (Eigen::Index r = 0; r < xd.rows(); ++r) {
                        xd(r, c) = dropout_rng->unit() < keep ? xd(r, c) / keep : 0.0f;
                    }
                }
            }
            dropped[l] = xd;
            lora_mid[l] = xd * layer.lora_a.transpose();
            z += layer.lora_scale * (lora_mid[l] * layer.lora_b.transpose());
        }
        z.rowwise() += layer.b.col(0).transpose();
        preact[l] = z;
        h = (l + 1 < layers_.size()) ? Matrix(z.cwiseMax(0.0f)) : z;
    }

    // Weighted softmax cross-entropy.
    Matrix probs(batch, 2);
    double loss = 0.0;
    Matrix dz(batch, 2);
    for (Eigen::Index i = 0; i < batch; ++i) {
        float m = std::max(h(i, 0), h(i, 1));
        float e0 = std::exp(h(i, 0) - m);
        float e1 = std::exp(h(i, 1) - m);
        float sum = e0 + e1;
        probs(i, 0) = e0 / sum;
        probs(i, 1) = e1 / sum;
        int y = labels[i];
        float w = (y == 0) ? weight_human : weight_machine;
        loss += -static_cast<double>(w) *
                std::log(std::max(probs(i, y), 1e-30f));
        dz(i, 0) = w * (probs(i, 0) - (y == 0 ? 1.0f : 0.0f)) / static_cast<float>(batch);
        dz(i, 1) = w * (probs(i, 1) - (y == 1 ? 1.0f : 0.0f)) / static_cast<float>(batch);
    }
    loss /= static_cast<double>(batch);

    // Backward.
    Matrix delta = dz;
    for (std::size_t l = layers_.size(); l-- > 0;) {
        auto& layer = layers_[l];
        if (l + 1 < layers_.size()) {
            // delta arriving here is w.r.t. the ReLU output of layer l.
            delta = delta.cwiseProduct(
                (preact[l].array() > 0.0f).cast<float>().matrix());
        }
        if (!layer.frozen_base) {
            layer.gw += delta.transpose() * inputs[l];
        }
        layer.gb += delta.colwise().sum().transpose();
        Matrix dx = delta * layer.w;
        if (layer.lora_rank > 0) {
            Matrix dmid = layer.lora_scale * (delta * layer.lora_b);
            layer.gb_lora += layer.lora_scale * (delta.transpose() * lora_mid[l]);
            layer.ga += dmid.transpose() * dropped[l];
            dx += dmid * layer.lora_a;  // dropout mask is folded into `dropped`
        }
        if (l == 0) {
            break;
        }
        delta = std::move(dx);
    }
    return loss;
}

void Mlp::zero_grads() {
    for (auto& layer : layers_) {
        layer.gw = Matrix::Zero(layer.w.rows(), layer.w.cols());
        layer.gb = Matrix::Zero(layer.b.rows(), 1);
        if (layer.lora_rank > 0) {
            layer.ga = Matrix::Zero(layer.lora_a.rows(), layer.lora_a.cols());
            layer.gb_lora = Matrix::Zero(layer.lora_b.rows(), layer.lora_b.cols());
        }
    }
}

void Mlp::enable_adapters(int rank, float alpha, float dropout, int quant_bits,
                          std::uint64_t seed) {
    if (rank < 1) {
        throw std::invalid_argument("enable_adapters: rank must be >= 1");
    }
    rng::Prng prng(rng::derive_seed(seed, "lora_init"));
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        auto& layer = layers_[l];
        bool is_head = (l + 1 == layers_.size());
        if (is_head) {
            // The classification head stays fully trainable in both regimes.
            continue;
        }
        layer.frozen_base = true;
        quantize_dequantize(layer.w, quant_bits);
        layer.lora_rank = rank;
        layer.lora_scale = alpha / static_cast<float>(rank);
        layer.lora_dropout = dropout;
        layer.lora_a = Matrix(rank, layer.w.cols());
        float std_dev = 1.0f / std::sqrt(static_cast<float>(layer.w.cols()));
        for (Eigen::Index j = 0; j < layer.lora_a.cols(); ++j) {
            for (Eigen::Index i = 0; i < layer.lora_a.rows(); ++i) {
                layer.lora_a(i, j) = std_dev * gaussian(prng);
            }
        }
        // B starts at zero so the adapted model equals the base model.
        layer.lora_b = Matrix::Zero(layer.w.rows(), rank);
    }
    adapters_enabled_ = true;
}

void Mlp::merge_adapters() {
    for (auto& layer : layers_) {
        if (layer.lora_rank > 0) {
            layer.w = layer.effective_weight();
            layer.lora_rank = 0;
            layer.lora_a = Matrix();
            layer.lora_b = Matrix();
        }
        layer.frozen_base = false;
    }
    adapters_enabled_ = false;
}

std::vector<TensorRef> Mlp::trainable_tensors() {
    std::vector<TensorRef> refs;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        auto& layer = layers_[l];
        std::string prefix = "layer" + std::to_string(l);
        if (!layer.frozen_base) {
            refs.push_back({prefix + ".w", &layer.w, &layer.gw});
            refs.push_back({prefix + ".b", &layer.b, &layer.gb});
        } else {
            // Biases follow the frozen base in the adapter regime.
        }
        if (layer.lora_rank > 0) {
            refs.push_back({prefix + ".lora_a", &layer.lora_a, &layer.ga});
            refs.push_back({prefix + ".lora_b", &layer.lora_b, &layer.gb_lora});
        }
    }
    return refs;
}

std::int64_t Mlp::parameter_count() const {
    std::int64_t n = 0;
    for (const auto& layer : layers_) {
        n += layer.base_parameter_count();
    }
    return n;
}

std::int64_t Mlp::trainable_parameter_count() const {
    std::int64_t n = 0;
    for (const auto& layer : layers_) {
        n += layer.trainable_parameter_count();
    }
    return n;
}

void Mlp::round_weights_to_half() {
    for (auto& ref : trainable_tensors()) {
        *ref.value = ref.value->cast<Eigen::half>().cast<float>();
    }
}

void Mlp::save_weights(std::ostream& out) const {
    std::vector<std::pair<std::string, const Matrix*>> tensors;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        tensors.emplace_back("layer" + std::to_string(l) + ".w", &layers_[l].w);
        tensors.emplace_back("layer" + std::to_string(l) + ".b", &layers_[l].b);
    }
    write_tensors(out, tensors);
}

void Mlp::load_weights(std::istream& in) {
    auto tensors = read_tensors(in);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        auto w = tensors.find("layer" + std::to_string(l) + ".w");
        auto b = tensors.find("layer" + std::to_string(l) + ".b");
        if (w == tensors.end() || b == tensors.end()) {
            throw std::runtime_error("model weights missing layer " + std::to_string(l));
        }
        if (w->second.rows() != layers_[l].w.rows() || w->second.cols() != layers_[l].w.cols()) {
            throw std::runtime_error("model weights shape mismatch at layer " +
                                     std::to_string(l));
        }
        layers_[l].w = w->second;
        layers_[l].b = b->second;
    }
}

void AdamW::step(const std::vector<TensorRef>& tensors) {
    ++t_;
    float bc1 = 1.0f - std::pow(cfg_.beta1, static_cast<float>(t_));
    float bc2 = 1.0f - std::pow(cfg_.beta2, static_cast<float>(t_));
    for (const auto& ref : tensors) {
        auto it = state_.try_emplace(ref.name,
                                     std::make_pair(Matrix::Zero(ref.value->rows(),
                                                                 ref.value->cols()),
                                                    Matrix::Zero(ref.value->rows(),
                                                                 ref.value->cols())))
                      .first;
        auto& [m, v] = it->second;
        m = cfg_.beta1 * m + (1.0f - cfg_.beta1) * (*ref.grad);
        v = cfg_.beta2 * v + (1.0f - cfg_.beta2) * ref.grad->cwiseProduct(*ref.grad);
        Matrix m_hat = m / bc1;
        Matrix v_hat = v / bc2;
        Matrix update = m_hat.array() / (v_hat.array().sqrt() + cfg_.eps);
        if (cfg_.weight_decay > 0.0f) {
            update += cfg_.weight_decay * (*ref.value);
        }
        *ref.value -= cfg_.lr * update;
    }
}

void quantize_dequantize(Matrix& w, int bits, int block_size) {
    if (bits < 2 || bits > 8) {
        throw std::invalid_argument("quantize_dequantize: bits must be in [2, 8]");
    }
    const float levels = static_cast<float>((1 << (bits - 1)) - 1);
    float* data = w.data();
    const auto n = static_cast<std::int64_t>(w.size());
    for (std::int64_t start = 0; start < n; start += block_size) {
        std::int64_t end = std::min(n, start + block_size);
        float absmax = 0.0f;
        for (std::int64_t i = start; i < end; ++i) {
            absmax = std::max(absmax, std::abs(data[i]));
        }
        if (absmax == 0.0f) {
            continue;
        }
        float scale = absmax / levels;
        for (std::int64_t i = start; i < end; ++i) {
            data[i] = std::round(data[i] / scale) * scale;
        }
    }
}

void write_tensors(std::ostream& out,
                   const std::vector<std::pair<std::string, const Matrix*>>& tensors) {
    auto put_u32 = [&](std::uint32_t v) {
        char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
        out.write(bytes, 4);
    };
    out.write("MGTDW001", 8);
    put_u32(static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, matrix] : tensors) {
        put_u32(static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_u32(static_cast<std::uint32_t>(matrix->rows()));
        put_u32(static_cast<std::uint32_t>(matrix->cols()));
        // row-major for byte-stable output independent of Eigen's layout
        for (Eigen::Index r = 0; r < matrix->rows(); ++r) {
            for (Eigen::Index c = 0; c < matrix->cols(); ++c) {
                float value = (*matrix)(r, c);
                out.write(reinterpret_cast<const char*>(&value), sizeof(float));
            }
        }
    }
}

std::map<std::string, Matrix> read_tensors(std::istream& in) {
    auto get_u32 = [&]() {
        unsigned char bytes[4];
        in.read(reinterpret_cast<char*>(bytes), 4);
        return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
               (static_cast<std::uint32_t>(bytes[2]) << 16) |
               (static_cast<std::uint32_t>(bytes[3]) << 24);
    };
    char magic[8];
    in.read(magic, 8);
    if (!in || std::string(magic, 8) != "MGTDW001") {
        throw std::runtime_error("bad weights file header");
    }
    std::map<std::string, Matrix> tensors;
    std::uint32_t count = get_u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint32_t name_len = get_u32();
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        std::uint32_t rows = get_u32();
        std::uint32_t cols = get_u32();
        Matrix m(rows, cols);
        for (std::uint32_t r = 0; r < rows; ++r) {
            for (std::uint32_t c = 0; c < cols; ++c) {
                float value = 0.0f;
                in.read(reinterpret_cast<char*>(&value), sizeof(float));
                m(r, c) = value;
            }
        }
        if (!in) {
            throw std::runtime_error("truncated weights file");
        }
        tensors.emplace(std::move(name), std::move(m));
    }
    return tensors;
}

}  // namespace mgtd::nn
