#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "knock/error.hpp"
#include "knock/nn/ops.hpp"
#include "knock/nn/recurrent.hpp"
#include "knock/rng.hpp"

namespace knock::nn {

enum class Cell { rnn, lstm };

inline const char* to_string(Cell c) { return c == Cell::rnn ? "rnn" : "lstm"; }

inline Cell cell_from_string(const std::string& s) {
    if (s == "rnn") return Cell::rnn;
    if (s == "lstm") return Cell::lstm;
    throw ArgumentError("unknown cell type: " + s + " (expected rnn or lstm)");
}

enum class Optimizer { adam, sgd };

/**
 * Classifier hyperparameters. The defaults are the published architecture:
 * Conv1d(128,32,3,pad 1) -> Conv1d(32,64,3,pad 1) -> AvgPool1d(1) ->
 * per-frame Linear(64,64)+ReLU -> RNN/LSTM(hidden 64) -> Dropout(0.5) ->
 * Linear(64,3); batch 128, 60 epochs, learning rate 0.001.
 */
struct ModelConfig {
    Cell cell = Cell::rnn;
    std::size_t in_channels = 128;
    std::size_t conv1_out = 32;
    std::size_t conv2_out = 64;
    std::size_t kernel = 3; // pad = (kernel-1)/2
    std::size_t pool_kernel = 1;
    std::size_t hidden = 64;
    double dropout_p = 0.5;
    std::size_t classes = 3;
    std::size_t batch_size = 128;
    std::size_t epochs = 60;
    double learning_rate = 0.001;
    std::size_t frames = 64; // input frame count T
    Optimizer optimizer = Optimizer::adam;

    void validate() const {
        if (in_channels == 0 || conv1_out == 0 || conv2_out == 0 || hidden == 0 ||
            classes == 0 || batch_size == 0 || epochs == 0 || frames == 0)
            throw ArgumentError("model config: all sizes must be positive");
        if (kernel % 2 == 0) throw ArgumentError("model config: kernel must be odd");
        if (pool_kernel == 0 || frames / pool_kernel == 0)
            throw ArgumentError("model config: pool kernel incompatible with frames");
        if (dropout_p < 0.0 || dropout_p >= 1.0)
            throw ArgumentError("model config: dropout must lie in [0, 1)");
        if (learning_rate <= 0.0)
            throw ArgumentError("model config: learning rate must be positive");
    }
};

/**
 * The conv + recurrent classifier. Owns its named parameter tensors; the
 * forward pass builds a fresh autodiff graph over them. Deterministic given
 * (seed, input, dropout stream, mode).
 */
class Model {
public:
    Model(const ModelConfig& cfg, std::uint64_t init_seed) : cfg_(cfg) {
        cfg_.validate();
        Rng rng(init_seed);
        const std::size_t K = cfg_.kernel;
        const std::size_t gate_mult = cfg_.cell == Cell::lstm ? 4 : 1;
        add_param("conv1.weight", {cfg_.conv1_out, cfg_.in_channels, K},
                  cfg_.in_channels * K, rng);
        add_param("conv1.bias", {cfg_.conv1_out}, 0, rng);
        add_param("conv2.weight", {cfg_.conv2_out, cfg_.conv1_out, K},
                  cfg_.conv1_out * K, rng);
        add_param("conv2.bias", {cfg_.conv2_out}, 0, rng);
        add_param("frame_linear.weight", {cfg_.hidden, cfg_.conv2_out}, cfg_.conv2_out, rng);
        add_param("frame_linear.bias", {cfg_.hidden}, 0, rng);
        const std::string rec = recurrent_prefix();
        add_param(rec + ".weight_ih", {gate_mult * cfg_.hidden, cfg_.hidden}, cfg_.hidden, rng);
        add_param(rec + ".weight_hh", {gate_mult * cfg_.hidden, cfg_.hidden}, cfg_.hidden, rng);
        add_param(rec + ".bias_ih", {gate_mult * cfg_.hidden}, 0, rng);
        add_param(rec + ".bias_hh", {gate_mult * cfg_.hidden}, 0, rng);
        add_param("output.weight", {cfg_.classes, cfg_.hidden}, cfg_.hidden, rng);
        add_param("output.bias", {cfg_.classes}, 0, rng);
    }

    const ModelConfig& config() const { return cfg_; }
    std::string recurrent_prefix() const { return cfg_.cell == Cell::rnn ? "rnn" : "lstm"; }

    std::vector<Tensor>& parameters() { return params_; }
    const std::vector<std::string>& parameter_names() const { return names_; }

    Tensor& param(const std::string& name) {
        for (std::size_t i = 0; i < names_.size(); ++i)
            if (names_[i] == name) return params_[i];
        throw ArgumentError("unknown parameter: " + name);
    }

    std::size_t parameter_count() const {
        std::size_t total = 0;
        for (const auto& p : params_) total += p.numel();
        return total;
    }

    void zero_grad() {
        for (auto& p : params_) p.zero_grad();
    }

    /**
     * Forward pass. input is (B, in_channels, frames) row-major. The
     * dropout rng is consumed only in training mode.
     */
    Tensor forward(const Tensor& input, bool training, Rng& dropout_rng) {
        if (input.shape().size() != 3 || input.dim(1) != cfg_.in_channels ||
            input.dim(2) != cfg_.frames)
            throw ShapeError("model forward: input must be (B, " +
                             std::to_string(cfg_.in_channels) + ", " +
                             std::to_string(cfg_.frames) + ")");
        const std::size_t B = input.dim(0);

        Tensor h = conv1d(input, param("conv1.weight"), param("conv1.bias"));
        h = relu(h);
        h = conv1d(h, param("conv2.weight"), param("conv2.bias"));
        h = relu(h);
        h = avg_pool1d(h, cfg_.pool_kernel);

        const std::size_t T = h.dim(2);
        h = to_time_major(h);                       // (T, B, C2)
        h = reshape(h, {T * B, cfg_.conv2_out});
        h = relu(linear(h, param("frame_linear.weight"), param("frame_linear.bias")));
        h = reshape(h, {T, B, cfg_.hidden});

        const std::string rec = recurrent_prefix();
        Tensor h0 = Tensor::zeros({B, cfg_.hidden});
        Tensor states;
        if (cfg_.cell == Cell::rnn) {
            states = rnn_forward(h, param(rec + ".weight_ih"), param(rec + ".weight_hh"),
                                 param(rec + ".bias_ih"), param(rec + ".bias_hh"), h0);
        } else {
            Tensor c0 = Tensor::zeros({B, cfg_.hidden});
            states = lstm_forward(h, param(rec + ".weight_ih"), param(rec + ".weight_hh"),
                                  param(rec + ".bias_ih"), param(rec + ".bias_hh"), h0, c0);
        }

        Tensor last = take_last(states);
        last = dropout(last, cfg_.dropout_p, dropout_rng, training);
        return linear(last, param("output.weight"), param("output.bias"));
    }

    /// Expected parameter element count for a config (closed form).
    static std::size_t expected_parameter_count(const ModelConfig& cfg) {
        const std::size_t g = cfg.cell == Cell::lstm ? 4 : 1;
        std::size_t n = 0;
        n += cfg.conv1_out * cfg.in_channels * cfg.kernel + cfg.conv1_out;
        n += cfg.conv2_out * cfg.conv1_out * cfg.kernel + cfg.conv2_out;
        n += cfg.hidden * cfg.conv2_out + cfg.hidden;
        n += g * cfg.hidden * cfg.hidden + g * cfg.hidden * cfg.hidden;
        n += g * cfg.hidden + g * cfg.hidden;
        n += cfg.classes * cfg.hidden + cfg.classes;
        return n;
    }

private:
    void add_param(const std::string& name, std::vector<std::size_t> shape,
                   std::size_t fan_in, Rng& rng) {
        Tensor t = Tensor::zeros(std::move(shape), true);
        if (fan_in > 0) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
            for (auto& v : t.values()) v = rng.uniform(-bound, bound);
        }
        names_.push_back(name);
        params_.push_back(std::move(t));
    }

    ModelConfig cfg_;
    std::vector<std::string> names_;
    std::vector<Tensor> params_;
};

} // namespace knock::nn
