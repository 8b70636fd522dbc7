#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "knock/error.hpp"
#include "knock/nn/tensor.hpp"
#include "knock/rng.hpp"

namespace knock::nn {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;
using StrideDyn = Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>;

namespace detail {

inline MapMat map2d(std::vector<double>& v, std::size_t rows, std::size_t cols,
                    std::size_t offset = 0) {
    return MapMat(v.data() + offset, static_cast<Eigen::Index>(rows),
                  static_cast<Eigen::Index>(cols));
}

inline ConstMapMat cmap2d(const std::vector<double>& v, std::size_t rows,
                          std::size_t cols, std::size_t offset = 0) {
    return ConstMapMat(v.data() + offset, static_cast<Eigen::Index>(rows),
                       static_cast<Eigen::Index>(cols));
}

} // namespace detail

/**
 * 1-D convolution (cross-correlation) with zero padding keeping the length:
 * input (B, C, L), weights (O, C, K) with odd K and pad (K-1)/2, bias (O),
 * output (B, O, L).
 */
inline Tensor conv1d(const Tensor& input, const Tensor& weight, const Tensor& bias) {
    if (input.shape().size() != 3 || weight.shape().size() != 3)
        throw ShapeError("conv1d: input must be (B,C,L), weight (O,C,K)");
    const std::size_t B = input.dim(0), C = input.dim(1), L = input.dim(2);
    const std::size_t O = weight.dim(0), K = weight.dim(2);
    if (weight.dim(1) != C) throw ShapeError("conv1d: channel mismatch");
    if (K % 2 == 0) throw ShapeError("conv1d: kernel must be odd");
    if (bias.shape() != std::vector<std::size_t>{O})
        throw ShapeError("conv1d: bias must be (O)");
    const long pad = static_cast<long>(K / 2);

    Tensor out = Tensor::zeros({B, O, L});
    auto in_node = input.node();
    auto w_node = weight.node();
    auto b_node = bias.node();

    const Eigen::VectorXd bvec =
        Eigen::Map<const Eigen::VectorXd>(b_node->values.data(), static_cast<Eigen::Index>(O));
    for (std::size_t b = 0; b < B; ++b) {
        auto X = detail::cmap2d(in_node->values, C, L, b * C * L);
        auto Y = detail::map2d(out.values(), O, L, b * O * L);
        Y.colwise() = bvec;
        for (std::size_t k = 0; k < K; ++k) {
            const long s = static_cast<long>(k) - pad;
            const long start = std::max(0L, -s);
            const long end = std::min<long>(static_cast<long>(L), static_cast<long>(L) - s);
            if (end <= start) continue;
            const long cols = end - start;
            Eigen::Map<const RowMat, 0, StrideDyn> Wk(
                w_node->values.data() + k, static_cast<Eigen::Index>(O),
                static_cast<Eigen::Index>(C),
                StrideDyn(static_cast<Eigen::Index>(C * K), static_cast<Eigen::Index>(K)));
            Y.block(0, start, O, cols).noalias() += Wk * X.block(0, start + s, C, cols);
        }
    }

    auto node = out.node();
    node->parents = {in_node, w_node, b_node};
    node->requires_grad = true;
    node->backward_fn = [B, C, L, O, K, pad, in_node, w_node, b_node](Tensor::Node& self) {
        for (std::size_t b = 0; b < B; ++b) {
            auto dY = detail::cmap2d(self.grad, O, L, b * O * L);
            auto X = detail::cmap2d(in_node->values, C, L, b * C * L);
            auto dX = detail::map2d(in_node->grad, C, L, b * C * L);
            Eigen::Map<Eigen::VectorXd> db(b_node->grad.data(), static_cast<Eigen::Index>(O));
            db += dY.rowwise().sum();
            for (std::size_t k = 0; k < K; ++k) {
                const long s = static_cast<long>(k) - pad;
                const long start = std::max(0L, -s);
                const long end = std::min<long>(static_cast<long>(L), static_cast<long>(L) - s);
                if (end <= start) continue;
                const long cols = end - start;
                Eigen::Map<const RowMat, 0, StrideDyn> Wk(
                    w_node->values.data() + k, static_cast<Eigen::Index>(O),
                    static_cast<Eigen::Index>(C),
                    StrideDyn(static_cast<Eigen::Index>(C * K), static_cast<Eigen::Index>(K)));
                Eigen::Map<RowMat, 0, StrideDyn> dWk(
                    w_node->grad.data() + k, static_cast<Eigen::Index>(O),
                    static_cast<Eigen::Index>(C),
                    StrideDyn(static_cast<Eigen::Index>(C * K), static_cast<Eigen::Index>(K)));
                dX.block(0, start + s, C, cols).noalias() +=
                    Wk.transpose() * dY.block(0, start, O, cols);
                dWk += dY.block(0, start, O, cols) * X.block(0, start + s, C, cols).transpose();
            }
        }
    };
    return out;
}

/**
 * Average pooling over non-overlapping windows along the last axis.
 * kernel 1 is the identity map; otherwise output length is floor(L/k).
 */
inline Tensor avg_pool1d(const Tensor& input, std::size_t kernel) {
    if (kernel < 1) throw ShapeError("avg_pool1d: kernel must be >= 1");
    if (input.shape().size() != 3) throw ShapeError("avg_pool1d: input must be (B,C,L)");
    const std::size_t B = input.dim(0), C = input.dim(1), L = input.dim(2);
    const std::size_t Lo = L / kernel;
    if (Lo == 0) throw ShapeError("avg_pool1d: kernel larger than input length");

    Tensor out = Tensor::zeros({B, C, Lo});
    auto in_node = input.node();
    const double inv_k = 1.0 / static_cast<double>(kernel);
    for (std::size_t bc = 0; bc < B * C; ++bc)
        for (std::size_t j = 0; j < Lo; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < kernel; ++i)
                acc += in_node->values[bc * L + j * kernel + i];
            out.values()[bc * Lo + j] = acc * inv_k;
        }

    auto node = out.node();
    node->parents = {in_node};
    node->requires_grad = true;
    node->backward_fn = [B, C, L, Lo, kernel, inv_k, in_node](Tensor::Node& self) {
        for (std::size_t bc = 0; bc < B * C; ++bc)
            for (std::size_t j = 0; j < Lo; ++j) {
                const double g = self.grad[bc * Lo + j] * inv_k;
                for (std::size_t i = 0; i < kernel; ++i)
                    in_node->grad[bc * L + j * kernel + i] += g;
            }
    };
    return out;
}

/// Affine map: input (N, F), weight (O, F), bias (O) -> (N, O).
inline Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias) {
    if (input.shape().size() != 2 || weight.shape().size() != 2)
        throw ShapeError("linear: input (N,F), weight (O,F)");
    const std::size_t N = input.dim(0), F = input.dim(1), O = weight.dim(0);
    if (weight.dim(1) != F) throw ShapeError("linear: feature mismatch");
    if (bias.shape() != std::vector<std::size_t>{O})
        throw ShapeError("linear: bias must be (O)");

    Tensor out = Tensor::zeros({N, O});
    auto in_node = input.node();
    auto w_node = weight.node();
    auto b_node = bias.node();
    {
        auto X = detail::cmap2d(in_node->values, N, F);
        auto W = detail::cmap2d(w_node->values, O, F);
        auto Y = detail::map2d(out.values(), N, O);
        Y.noalias() = X * W.transpose();
        Y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(
            b_node->values.data(), static_cast<Eigen::Index>(O));
    }

    auto node = out.node();
    node->parents = {in_node, w_node, b_node};
    node->requires_grad = true;
    node->backward_fn = [N, F, O, in_node, w_node, b_node](Tensor::Node& self) {
        auto dY = detail::cmap2d(self.grad, N, O);
        auto X = detail::cmap2d(in_node->values, N, F);
        auto W = detail::cmap2d(w_node->values, O, F);
        detail::map2d(in_node->grad, N, F).noalias() += dY * W;
        detail::map2d(w_node->grad, O, F).noalias() += dY.transpose() * X;
        Eigen::Map<Eigen::RowVectorXd>(b_node->grad.data(), static_cast<Eigen::Index>(O)) +=
            dY.colwise().sum();
    };
    return out;
}

/// Elementwise max(0, x).
inline Tensor relu(const Tensor& input) {
    Tensor out = Tensor::zeros(input.shape());
    auto in_node = input.node();
    for (std::size_t i = 0; i < in_node->values.size(); ++i)
        out.values()[i] = in_node->values[i] > 0.0 ? in_node->values[i] : 0.0;
    auto node = out.node();
    node->parents = {in_node};
    node->requires_grad = true;
    node->backward_fn = [in_node](Tensor::Node& self) {
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            if (in_node->values[i] > 0.0) in_node->grad[i] += self.grad[i];
    };
    return out;
}

/**
 * Inverted dropout. While training, each unit is zeroed with probability p
 * and survivors are scaled by 1/(1-p); at inference it is the identity.
 */
inline Tensor dropout(const Tensor& input, double p, Rng& rng, bool training) {
    if (p < 0.0 || p >= 1.0) throw ArgumentError("dropout: p must lie in [0, 1)");
    if (!training || p == 0.0) {
        Tensor out = Tensor::from(input.shape(), input.values());
        auto node = out.node();
        node->parents = {input.node()};
        node->requires_grad = true;
        auto in_node = input.node();
        node->backward_fn = [in_node](Tensor::Node& self) {
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                in_node->grad[i] += self.grad[i];
        };
        return out;
    }
    const double scale = 1.0 / (1.0 - p);
    auto mask = std::make_shared<std::vector<double>>(input.numel());
    for (auto& m : *mask) m = rng.uniform01() >= p ? scale : 0.0;

    Tensor out = Tensor::zeros(input.shape());
    auto in_node = input.node();
    for (std::size_t i = 0; i < in_node->values.size(); ++i)
        out.values()[i] = in_node->values[i] * (*mask)[i];
    auto node = out.node();
    node->parents = {in_node};
    node->requires_grad = true;
    node->backward_fn = [in_node, mask](Tensor::Node& self) {
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            in_node->grad[i] += self.grad[i] * (*mask)[i];
    };
    return out;
}

/// Permute (B, C, T) to time-major (T, B, C).
inline Tensor to_time_major(const Tensor& input) {
    if (input.shape().size() != 3) throw ShapeError("to_time_major: input must be (B,C,T)");
    const std::size_t B = input.dim(0), C = input.dim(1), T = input.dim(2);
    Tensor out = Tensor::zeros({T, B, C});
    auto in_node = input.node();
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t t = 0; t < T; ++t)
                out.values()[(t * B + b) * C + c] = in_node->values[(b * C + c) * T + t];
    auto node = out.node();
    node->parents = {in_node};
    node->requires_grad = true;
    node->backward_fn = [B, C, T, in_node](Tensor::Node& self) {
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t c = 0; c < C; ++c)
                for (std::size_t t = 0; t < T; ++t)
                    in_node->grad[(b * C + c) * T + t] += self.grad[(t * B + b) * C + c];
    };
    return out;
}

/// View with a different shape (same element count, copied buffer).
inline Tensor reshape(const Tensor& input, std::vector<std::size_t> shape) {
    std::size_t total = 1;
    for (auto d : shape) total *= d;
    if (total != input.numel()) throw ShapeError("reshape: element count mismatch");
    Tensor out = Tensor::from(std::move(shape), input.values());
    auto in_node = input.node();
    auto node = out.node();
    node->parents = {in_node};
    node->requires_grad = true;
    node->backward_fn = [in_node](Tensor::Node& self) {
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            in_node->grad[i] += self.grad[i];
    };
    return out;
}

/// Last time step of a (T, B, H) sequence -> (B, H).
inline Tensor take_last(const Tensor& seq) {
    if (seq.shape().size() != 3) throw ShapeError("take_last: input must be (T,B,H)");
    const std::size_t T = seq.dim(0), B = seq.dim(1), H = seq.dim(2);
    Tensor out = Tensor::zeros({B, H});
    auto in_node = seq.node();
    const std::size_t off = (T - 1) * B * H;
    for (std::size_t i = 0; i < B * H; ++i) out.values()[i] = in_node->values[off + i];
    auto node = out.node();
    node->parents = {in_node};
    node->requires_grad = true;
    node->backward_fn = [off, in_node](Tensor::Node& self) {
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            in_node->grad[off + i] += self.grad[i];
    };
    return out;
}

/**
 * Mean softmax cross-entropy over a batch of logits (B, K) with integer
 * labels; max-subtraction stabilized. Gradient is (softmax - onehot)/B.
 */
inline Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    if (logits.shape().size() != 2) throw ShapeError("softmax_cross_entropy: logits (B,K)");
    const std::size_t B = logits.dim(0), K = logits.dim(1);
    if (labels.size() != B)
        throw ShapeError("softmax_cross_entropy: one label per batch row");
    for (int y : labels)
        if (y < 0 || static_cast<std::size_t>(y) >= K)
            throw ArgumentError("softmax_cross_entropy: label out of range");

    auto in_node = logits.node();
    auto probs = std::make_shared<std::vector<double>>(B * K);
    double loss = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
        const double* row = in_node->values.data() + b * K;
        double mx = row[0];
        for (std::size_t k = 1; k < K; ++k) mx = std::max(mx, row[k]);
        double denom = 0.0;
        for (std::size_t k = 0; k < K; ++k) denom += std::exp(row[k] - mx);
        const double log_denom = std::log(denom);
        for (std::size_t k = 0; k < K; ++k)
            (*probs)[b * K + k] = std::exp(row[k] - mx - log_denom);
        loss -= row[labels[b]] - mx - log_denom;
    }
    loss /= static_cast<double>(B);

    Tensor out = Tensor::from({1}, {loss});
    auto node = out.node();
    node->parents = {in_node};
    node->requires_grad = true;
    auto labels_copy = std::make_shared<std::vector<int>>(labels);
    node->backward_fn = [B, K, probs, labels_copy, in_node](Tensor::Node& self) {
        const double g = self.grad[0] / static_cast<double>(B);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t k = 0; k < K; ++k) {
                const double onehot = static_cast<std::size_t>((*labels_copy)[b]) == k ? 1.0 : 0.0;
                in_node->grad[b * K + k] += g * ((*probs)[b * K + k] - onehot);
            }
    };
    return out;
}

} // namespace knock::nn
