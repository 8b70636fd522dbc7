#pragma once

#include <cmath>
#include <vector>

#include "knock/error.hpp"
#include "knock/nn/tensor.hpp"

namespace knock::nn {

/**
 * Bias-corrected Adam (beta1 0.9, beta2 0.999, eps 1e-8). State vectors are
 * lazily sized to the parameter list on the first step.
 */
class Adam {
public:
    explicit Adam(double lr) : lr_(lr) {}

    void step(std::vector<Tensor>& params) {
        if (m_.empty()) {
            m_.resize(params.size());
            v_.resize(params.size());
            for (std::size_t i = 0; i < params.size(); ++i) {
                m_[i].assign(params[i].numel(), 0.0);
                v_[i].assign(params[i].numel(), 0.0);
            }
        }
        if (m_.size() != params.size())
            throw ShapeError("adam: parameter list changed size");
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto& value = params[i].values();
            auto& grad = params[i].grad();
            if (grad.size() != value.size())
                throw ShapeError("adam: gradient missing or mis-sized");
            for (std::size_t j = 0; j < value.size(); ++j) {
                const double g = grad[j];
                m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g;
                v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g * g;
                const double mhat = m_[i][j] / bc1;
                const double vhat = v_[i][j] / bc2;
                value[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

    long steps_taken() const { return t_; }

private:
    double lr_;
    double beta1_ = 0.9;
    double beta2_ = 0.999;
    double eps_ = 1e-8;
    long t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

/// Plain SGD, kept behind the optimizer config switch.
class Sgd {
public:
    explicit Sgd(double lr) : lr_(lr) {}

    void step(std::vector<Tensor>& params) {
        for (auto& p : params) {
            auto& value = p.values();
            auto& grad = p.grad();
            if (grad.size() != value.size())
                throw ShapeError("sgd: gradient missing or mis-sized");
            for (std::size_t j = 0; j < value.size(); ++j) value[j] -= lr_ * grad[j];
        }
    }

private:
    double lr_;
};

} // namespace knock::nn
