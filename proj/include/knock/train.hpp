#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "knock/features.hpp"
#include "knock/manifest.hpp"
#include "knock/nn/adam.hpp"
#include "knock/nn/checkpoint.hpp"
#include "knock/nn/model.hpp"
#include "knock/parallel.hpp"
#include "knock/pipeline.hpp"
#include "knock/wav.hpp"

namespace knock {

/// In-memory featurized dataset.
struct Dataset {
    std::vector<FeatureTensor> features;
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }

    Dataset subset(const std::vector<std::size_t>& indices) const {
        Dataset out;
        out.features.reserve(indices.size());
        out.labels.reserve(indices.size());
        for (auto i : indices) {
            out.features.push_back(features[i]);
            out.labels.push_back(labels[i]);
        }
        return out;
    }
};

/// Decode and featurize every manifest entry (parallel, deterministic).
inline Dataset load_dataset(const Manifest& manifest, const MfccConfig& cfg) {
    Dataset ds;
    ds.features.resize(manifest.size());
    ds.labels.resize(manifest.size());
    parallel_for(manifest.size(), [&](std::size_t i) {
        const Signal sig = read_wav(manifest.resolve(manifest[i]));
        ds.features[i] = featurize(sig, cfg);
        ds.labels[i] = static_cast<int>(manifest[i].label);
    });
    return ds;
}

namespace detail {

inline nn::Tensor make_batch(const Dataset& ds, const std::vector<std::size_t>& idx,
                             std::vector<int>& labels_out) {
    const std::size_t B = idx.size();
    const std::size_t C = ds.features[idx[0]].rows;
    const std::size_t T = ds.features[idx[0]].cols;
    nn::Tensor batch = nn::Tensor::zeros({B, C, T});
    labels_out.resize(B);
    for (std::size_t b = 0; b < B; ++b) {
        const auto& t = ds.features[idx[b]];
        if (t.rows != C || t.cols != T)
            throw ShapeError("dataset holds mixed feature shapes");
        std::copy(t.data.begin(), t.data.end(), batch.values().begin() + b * C * T);
        labels_out[b] = ds.labels[idx[b]];
    }
    return batch;
}

inline double mean_loss(nn::Model& model, const Dataset& ds, std::size_t batch_size) {
    Rng unused(0); // dropout stream is not consumed at inference
    double total = 0.0;
    std::vector<std::size_t> idx;
    std::vector<int> labels;
    for (std::size_t start = 0; start < ds.size(); start += batch_size) {
        const std::size_t end = std::min(ds.size(), start + batch_size);
        idx.resize(end - start);
        std::iota(idx.begin(), idx.end(), start);
        nn::Tensor batch = make_batch(ds, idx, labels);
        nn::Tensor logits = model.forward(batch, false, unused);
        nn::Tensor loss = nn::softmax_cross_entropy(logits, labels);
        total += loss.scalar() * static_cast<double>(end - start);
    }
    return total / static_cast<double>(ds.size());
}

} // namespace detail

struct TrainLogEntry {
    std::size_t epoch = 0; // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainResult {
    nn::Checkpoint checkpoint;
    std::vector<TrainLogEntry> log;
    std::size_t best_epoch = 0;
    double best_val_loss = 0.0;
};

/**
 * Train for cfg.epochs epochs of shuffled mini-batches (last partial batch
 * kept). Records per-epoch train and validation loss and checkpoints both
 * the final weights and the best-validation-epoch weights. Bit-reproducible
 * for a fixed (cfg, seed, data).
 */
inline TrainResult train(const Dataset& train_ds, const Dataset& val_ds,
                         const nn::ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (train_ds.size() == 0) throw ArgumentError("train: empty training set");
    if (val_ds.size() == 0) throw ArgumentError("train: empty validation set");

    nn::Model model(cfg, seed);
    const Rng master(seed);
    Rng shuffle_rng = master.split(1);
    Rng dropout_rng = master.split(2);

    nn::Adam adam(cfg.learning_rate);
    nn::Sgd sgd(cfg.learning_rate);

    TrainResult result;
    result.best_val_loss = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> best_weights;

    std::vector<std::size_t> order(train_ds.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::size_t> batch_idx;
    std::vector<int> labels;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        detail::shuffle_indices(order, shuffle_rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            batch_idx.assign(order.begin() + start, order.begin() + end);
            nn::Tensor batch = detail::make_batch(train_ds, batch_idx, labels);
            model.zero_grad();
            nn::Tensor logits = model.forward(batch, true, dropout_rng);
            nn::Tensor loss = nn::softmax_cross_entropy(logits, labels);
            loss.backward();
            if (cfg.optimizer == nn::Optimizer::adam)
                adam.step(model.parameters());
            else
                sgd.step(model.parameters());
            epoch_loss += loss.scalar() * static_cast<double>(end - start);
        }
        epoch_loss /= static_cast<double>(train_ds.size());

        const double val_loss = detail::mean_loss(model, val_ds, cfg.batch_size);
        result.log.push_back({epoch, epoch_loss, val_loss});
        if (val_loss < result.best_val_loss) {
            result.best_val_loss = val_loss;
            result.best_epoch = epoch;
            best_weights.clear();
            for (auto& p : model.parameters()) best_weights.push_back(p.values());
        }
    }

    nn::Checkpoint ck;
    ck.metadata = {{"version", nn::Checkpoint::kVersion},
                   {"cell", nn::to_string(cfg.cell)},
                   {"config", nn::config_to_json(cfg)},
                   {"seed", seed},
                   {"epochs_run", cfg.epochs},
                   {"final_train_loss", result.log.back().train_loss},
                   {"final_val_loss", result.log.back().val_loss},
                   {"best_epoch", result.best_epoch},
                   {"best_val_loss", result.best_val_loss}};
    nn::store_weights(ck, model, "final");
    {
        // restore best weights and store them as the selection set
        auto& params = model.parameters();
        for (std::size_t i = 0; i < params.size(); ++i)
            params[i].values() = best_weights[i];
        nn::store_weights(ck, model, "best");
    }
    result.checkpoint = std::move(ck);
    return result;
}

/// Rebuild a model from checkpoint metadata and one of its weight sets.
inline nn::Model model_from_checkpoint(const nn::Checkpoint& ck,
                                       const std::string& set = "best") {
    const nn::ModelConfig cfg = nn::config_from_json(ck.metadata.at("config"));
    nn::Model model(cfg, 0);
    nn::load_weights(model, ck, set);
    return model;
}

/**
 * Argmax predictions (dropout inactive, lowest index wins ties). Returns
 * (true label, predicted label) pairs in dataset order.
 */
inline std::vector<std::pair<int, int>> predict(nn::Model& model, const Dataset& ds) {
    Rng unused(0);
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(ds.size());
    const std::size_t batch_size = model.config().batch_size;
    std::vector<std::size_t> idx;
    std::vector<int> labels;
    for (std::size_t start = 0; start < ds.size(); start += batch_size) {
        const std::size_t end = std::min(ds.size(), start + batch_size);
        idx.resize(end - start);
        std::iota(idx.begin(), idx.end(), start);
        nn::Tensor batch = detail::make_batch(ds, idx, labels);
        nn::Tensor logits = model.forward(batch, false, unused);
        const std::size_t K = logits.dim(1);
        for (std::size_t b = 0; b < idx.size(); ++b) {
            const double* row = logits.values().data() + b * K;
            int best = 0;
            for (std::size_t k = 1; k < K; ++k)
                if (row[k] > row[best]) best = static_cast<int>(k);
            pairs.push_back({labels[b], best});
        }
    }
    return pairs;
}

/**
 * Data-validation baseline: flatten the feature tensor into one linear
 * layer over 3 classes, softmax cross-entropy, Adam at 0.001 for 20
 * epochs. Returns (train accuracy, test accuracy) in percent.
 */
inline std::pair<double, double> baseline_linear(const Dataset& train_ds,
                                                 const Dataset& test_ds,
                                                 std::uint64_t seed,
                                                 std::size_t epochs = 20,
                                                 std::size_t batch_size = 128) {
    if (train_ds.size() == 0 || test_ds.size() == 0)
        throw ArgumentError("baseline_linear: empty dataset");
    const std::size_t F = train_ds.features[0].rows * train_ds.features[0].cols;
    Rng init_rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(F));
    nn::Tensor w = nn::Tensor::zeros({3, F}, true);
    for (auto& v : w.values()) v = init_rng.uniform(-bound, bound);
    nn::Tensor b = nn::Tensor::zeros({3}, true);
    std::vector<nn::Tensor> params{w, b};
    nn::Adam adam(0.001);
    Rng shuffle_rng = Rng(seed).split(1);

    const auto flat_batch = [&](const Dataset& ds, const std::vector<std::size_t>& idx,
                                std::vector<int>& labels_out) {
        nn::Tensor batch = nn::Tensor::zeros({idx.size(), F});
        labels_out.resize(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            const auto& t = ds.features[idx[i]];
            std::copy(t.data.begin(), t.data.end(), batch.values().begin() + i * F);
            labels_out[i] = ds.labels[idx[i]];
        }
        return batch;
    };

    std::vector<std::size_t> order(train_ds.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<int> labels;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        detail::shuffle_indices(order, shuffle_rng);
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            const std::size_t end = std::min(order.size(), start + batch_size);
            const std::vector<std::size_t> idx(order.begin() + start, order.begin() + end);
            nn::Tensor batch = flat_batch(train_ds, idx, labels);
            w.zero_grad();
            b.zero_grad();
            nn::Tensor loss =
                nn::softmax_cross_entropy(nn::linear(batch, w, b), labels);
            loss.backward();
            adam.step(params);
        }
    }

    const auto accuracy = [&](const Dataset& ds) {
        std::vector<std::size_t> idx(ds.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::size_t correct = 0;
        for (std::size_t start = 0; start < ds.size(); start += batch_size) {
            const std::size_t end = std::min(ds.size(), start + batch_size);
            const std::vector<std::size_t> chunk(idx.begin() + start, idx.begin() + end);
            nn::Tensor logits = nn::linear(flat_batch(ds, chunk, labels), w, b);
            for (std::size_t i = 0; i < chunk.size(); ++i) {
                const double* row = logits.values().data() + i * 3;
                int best = 0;
                for (int k = 1; k < 3; ++k)
                    if (row[k] > row[best]) best = k;
                if (best == labels[i]) ++correct;
            }
        }
        return 100.0 * static_cast<double>(correct) / static_cast<double>(ds.size());
    };
    return {accuracy(train_ds), accuracy(test_ds)};
}

} // namespace knock
