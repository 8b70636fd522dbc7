#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "knock/nn/ops.hpp"
#include "knock/nn/tensor.hpp"

namespace knock::nn {

/**
 * Elman RNN over a time-major sequence (T, B, F):
 *   h_t = tanh(W_ih x_t + b_ih + W_hh h_{t-1} + b_hh)
 * Returns all hidden states (T, B, H). The backward closure runs full
 * backpropagation through time over every step.
 */
inline Tensor rnn_forward(const Tensor& seq, const Tensor& w_ih, const Tensor& w_hh,
                          const Tensor& b_ih, const Tensor& b_hh, const Tensor& h0) {
    if (seq.shape().size() != 3) throw ShapeError("rnn_forward: seq must be (T,B,F)");
    const std::size_t T = seq.dim(0), B = seq.dim(1), F = seq.dim(2);
    const std::size_t H = w_ih.dim(0);
    if (w_ih.shape() != std::vector<std::size_t>{H, F} ||
        w_hh.shape() != std::vector<std::size_t>{H, H} ||
        b_ih.shape() != std::vector<std::size_t>{H} ||
        b_hh.shape() != std::vector<std::size_t>{H} ||
        h0.shape() != std::vector<std::size_t>{B, H})
        throw ShapeError("rnn_forward: parameter shapes do not match (H,F)");

    Tensor out = Tensor::zeros({T, B, H});
    auto seq_node = seq.node();
    auto wih_node = w_ih.node();
    auto whh_node = w_hh.node();
    auto bih_node = b_ih.node();
    auto bhh_node = b_hh.node();
    auto h0_node = h0.node();

    {
        auto Wih = detail::cmap2d(wih_node->values, H, F);
        auto Whh = detail::cmap2d(whh_node->values, H, H);
        const Eigen::RowVectorXd bias =
            Eigen::Map<const Eigen::RowVectorXd>(bih_node->values.data(), H) +
            Eigen::Map<const Eigen::RowVectorXd>(bhh_node->values.data(), H);
        RowMat h_prev = detail::cmap2d(h0_node->values, B, H);
        for (std::size_t t = 0; t < T; ++t) {
            auto X = detail::cmap2d(seq_node->values, B, F, t * B * F);
            auto Ht = detail::map2d(out.values(), B, H, t * B * H);
            Ht.noalias() = X * Wih.transpose() + h_prev * Whh.transpose();
            Ht.rowwise() += bias;
            Ht = Ht.array().tanh();
            h_prev = Ht;
        }
    }

    auto node = out.node();
    node->parents = {seq_node, wih_node, whh_node, bih_node, bhh_node, h0_node};
    node->requires_grad = true;
    node->backward_fn = [T, B, F, H, seq_node, wih_node, whh_node, bih_node, bhh_node,
                         h0_node](Tensor::Node& self) {
        auto Wih = detail::cmap2d(wih_node->values, H, F);
        auto Whh = detail::cmap2d(whh_node->values, H, H);
        auto dWih = detail::map2d(wih_node->grad, H, F);
        auto dWhh = detail::map2d(whh_node->grad, H, H);
        Eigen::Map<Eigen::RowVectorXd> dbih(bih_node->grad.data(), H);
        Eigen::Map<Eigen::RowVectorXd> dbhh(bhh_node->grad.data(), H);

        RowMat carry = RowMat::Zero(B, H); // dL/dh_t flowing from step t+1
        for (std::size_t ti = T; ti-- > 0;) {
            auto Ht = detail::cmap2d(self.values, B, H, ti * B * H);
            auto dHt = detail::cmap2d(self.grad, B, H, ti * B * H);
            RowMat da = (dHt + carry).cwiseProduct(
                (1.0 - Ht.array().square()).matrix());

            auto X = detail::cmap2d(seq_node->values, B, F, ti * B * F);
            dWih.noalias() += da.transpose() * X;
            if (ti > 0) {
                auto Hprev = detail::cmap2d(self.values, B, H, (ti - 1) * B * H);
                dWhh.noalias() += da.transpose() * Hprev;
            } else {
                auto Hprev = detail::cmap2d(h0_node->values, B, H);
                dWhh.noalias() += da.transpose() * Hprev;
            }
            dbih += da.colwise().sum();
            dbhh += da.colwise().sum();
            detail::map2d(seq_node->grad, B, F, ti * B * F).noalias() += da * Wih;
            carry.noalias() = da * Whh;
        }
        detail::map2d(h0_node->grad, B, H) += carry;
    };
    return out;
}

/**
 * LSTM over a time-major sequence (T, B, F), gate order (i, f, g, o):
 *   i,f,o = sigmoid, g = tanh of W_ih x_t + b_ih + W_hh h_{t-1} + b_hh
 *   c_t = f . c_{t-1} + i . g,  h_t = o . tanh(c_t)
 * Weights are (4H, F) and (4H, H), biases (4H). Returns hidden states
 * (T, B, H) with full BPTT in the backward closure.
 */
inline Tensor lstm_forward(const Tensor& seq, const Tensor& w_ih, const Tensor& w_hh,
                           const Tensor& b_ih, const Tensor& b_hh, const Tensor& h0,
                           const Tensor& c0) {
    if (seq.shape().size() != 3) throw ShapeError("lstm_forward: seq must be (T,B,F)");
    const std::size_t T = seq.dim(0), B = seq.dim(1), F = seq.dim(2);
    if (w_ih.shape().size() != 2 || w_ih.dim(0) % 4 != 0)
        throw ShapeError("lstm_forward: w_ih must be (4H,F)");
    const std::size_t H = w_ih.dim(0) / 4;
    if (w_ih.shape() != std::vector<std::size_t>{4 * H, F} ||
        w_hh.shape() != std::vector<std::size_t>{4 * H, H} ||
        b_ih.shape() != std::vector<std::size_t>{4 * H} ||
        b_hh.shape() != std::vector<std::size_t>{4 * H} ||
        h0.shape() != std::vector<std::size_t>{B, H} ||
        c0.shape() != std::vector<std::size_t>{B, H})
        throw ShapeError("lstm_forward: parameter shapes do not match (H,F)");

    Tensor out = Tensor::zeros({T, B, H});
    auto seq_node = seq.node();
    auto wih_node = w_ih.node();
    auto whh_node = w_hh.node();
    auto bih_node = b_ih.node();
    auto bhh_node = b_hh.node();
    auto h0_node = h0.node();
    auto c0_node = c0.node();

    // saved activations for the backward pass
    auto gates = std::make_shared<std::vector<double>>(T * B * 4 * H); // post-nonlinearity
    auto cells = std::make_shared<std::vector<double>>(T * B * H);
    auto tanh_c = std::make_shared<std::vector<double>>(T * B * H);

    const auto sigmoid = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    {
        auto Wih = detail::cmap2d(wih_node->values, 4 * H, F);
        auto Whh = detail::cmap2d(whh_node->values, 4 * H, H);
        const Eigen::RowVectorXd bias =
            Eigen::Map<const Eigen::RowVectorXd>(bih_node->values.data(), 4 * H) +
            Eigen::Map<const Eigen::RowVectorXd>(bhh_node->values.data(), 4 * H);
        RowMat h_prev = detail::cmap2d(h0_node->values, B, H);
        RowMat c_prev = detail::cmap2d(c0_node->values, B, H);
        RowMat z(B, 4 * H);
        for (std::size_t t = 0; t < T; ++t) {
            auto X = detail::cmap2d(seq_node->values, B, F, t * B * F);
            z.noalias() = X * Wih.transpose() + h_prev * Whh.transpose();
            z.rowwise() += bias;
            auto G = detail::map2d(*gates, B, 4 * H, t * B * 4 * H);
            auto Ct = detail::map2d(*cells, B, H, t * B * H);
            auto TCt = detail::map2d(*tanh_c, B, H, t * B * H);
            auto Ht = detail::map2d(out.values(), B, H, t * B * H);
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t j = 0; j < H; ++j) {
                    const double iv = sigmoid(z(b, j));
                    const double fv = sigmoid(z(b, H + j));
                    const double gv = std::tanh(z(b, 2 * H + j));
                    const double ov = sigmoid(z(b, 3 * H + j));
                    G(b, j) = iv;
                    G(b, H + j) = fv;
                    G(b, 2 * H + j) = gv;
                    G(b, 3 * H + j) = ov;
                    const double cv = fv * c_prev(b, j) + iv * gv;
                    Ct(b, j) = cv;
                    TCt(b, j) = std::tanh(cv);
                    Ht(b, j) = ov * TCt(b, j);
                }
            h_prev = Ht;
            c_prev = Ct;
        }
    }

    auto node = out.node();
    node->parents = {seq_node, wih_node, whh_node, bih_node, bhh_node, h0_node, c0_node};
    node->requires_grad = true;
    node->backward_fn = [T, B, F, H, gates, cells, tanh_c, seq_node, wih_node, whh_node,
                         bih_node, bhh_node, h0_node, c0_node](Tensor::Node& self) {
        auto Wih = detail::cmap2d(wih_node->values, 4 * H, F);
        auto Whh = detail::cmap2d(whh_node->values, 4 * H, H);
        auto dWih = detail::map2d(wih_node->grad, 4 * H, F);
        auto dWhh = detail::map2d(whh_node->grad, 4 * H, H);
        Eigen::Map<Eigen::RowVectorXd> dbih(bih_node->grad.data(), 4 * H);
        Eigen::Map<Eigen::RowVectorXd> dbhh(bhh_node->grad.data(), 4 * H);

        RowMat dh_carry = RowMat::Zero(B, H);
        RowMat dc_carry = RowMat::Zero(B, H);
        RowMat dz(B, 4 * H);
        for (std::size_t ti = T; ti-- > 0;) {
            auto G = detail::cmap2d(*gates, B, 4 * H, ti * B * 4 * H);
            auto Ct = detail::cmap2d(*cells, B, H, ti * B * H);
            auto TCt = detail::cmap2d(*tanh_c, B, H, ti * B * H);
            auto dHt = detail::cmap2d(self.grad, B, H, ti * B * H);

            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t j = 0; j < H; ++j) {
                    const double iv = G(b, j), fv = G(b, H + j);
                    const double gv = G(b, 2 * H + j), ov = G(b, 3 * H + j);
                    const double tc = TCt(b, j);
                    const double dh = dHt(b, j) + dh_carry(b, j);
                    const double dc = dh * ov * (1.0 - tc * tc) + dc_carry(b, j);
                    const double c_prev = ti > 0 ? (*cells)[((ti - 1) * B + b) * H + j]
                                                 : c0_node->values[b * H + j];
                    dz(b, j) = dc * gv * iv * (1.0 - iv);
                    dz(b, H + j) = dc * c_prev * fv * (1.0 - fv);
                    dz(b, 2 * H + j) = dc * iv * (1.0 - gv * gv);
                    dz(b, 3 * H + j) = dh * tc * ov * (1.0 - ov);
                    dc_carry(b, j) = dc * fv;
                }

            auto X = detail::cmap2d(seq_node->values, B, F, ti * B * F);
            dWih.noalias() += dz.transpose() * X;
            if (ti > 0) {
                auto Hprev = detail::cmap2d(self.values, B, H, (ti - 1) * B * H);
                dWhh.noalias() += dz.transpose() * Hprev;
            } else {
                auto Hprev = detail::cmap2d(h0_node->values, B, H);
                dWhh.noalias() += dz.transpose() * Hprev;
            }
            dbih += dz.colwise().sum();
            dbhh += dz.colwise().sum();
            detail::map2d(seq_node->grad, B, F, ti * B * F).noalias() += dz * Wih;
            dh_carry.noalias() = dz * Whh;
        }
        detail::map2d(h0_node->grad, B, H) += dh_carry;
        detail::map2d(c0_node->grad, B, H) += dc_carry;
    };
    return out;
}

} // namespace knock::nn
