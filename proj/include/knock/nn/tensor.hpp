#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <unordered_set>
#include <vector>

#include "knock/error.hpp"

namespace knock::nn {

/**
 * Reverse-mode autodiff tensor: a handle to a node in a dynamically built
 * tape. Each operation records its parents and a backward closure that
 * accumulates gradients into them. Values and gradients are double
 * precision, row-major.
 */
class Tensor {
public:
    struct Node {
        std::vector<std::size_t> shape;
        std::vector<double> values;
        std::vector<double> grad;
        bool requires_grad = false;
        std::vector<std::shared_ptr<Node>> parents;
        std::function<void(Node&)> backward_fn;

        std::size_t numel() const { return values.size(); }
        void ensure_grad() {
            if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
        }
    };

    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

    static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false) {
        auto n = std::make_shared<Node>();
        std::size_t total = 1;
        for (auto d : shape) total *= d;
        n->shape = std::move(shape);
        n->values.assign(total, 0.0);
        n->requires_grad = requires_grad;
        return Tensor(std::move(n));
    }

    static Tensor from(std::vector<std::size_t> shape, std::vector<double> values,
                       bool requires_grad = false) {
        std::size_t total = 1;
        for (auto d : shape) total *= d;
        if (values.size() != total)
            throw ShapeError("tensor data size does not match shape");
        auto n = std::make_shared<Node>();
        n->shape = std::move(shape);
        n->values = std::move(values);
        n->requires_grad = requires_grad;
        return Tensor(std::move(n));
    }

    bool defined() const { return node_ != nullptr; }
    const std::vector<std::size_t>& shape() const { return node_->shape; }
    std::size_t dim(std::size_t i) const { return node_->shape[i]; }
    std::size_t numel() const { return node_->numel(); }

    std::vector<double>& values() { return node_->values; }
    const std::vector<double>& values() const { return node_->values; }
    std::vector<double>& grad() { return node_->grad; }
    const std::vector<double>& grad() const { return node_->grad; }

    bool requires_grad() const { return node_->requires_grad; }
    std::shared_ptr<Node> node() const { return node_; }

    double scalar() const {
        if (numel() != 1) throw ShapeError("scalar() on non-scalar tensor");
        return node_->values[0];
    }

    void zero_grad() { node_->grad.assign(node_->values.size(), 0.0); }

    /**
     * Backpropagate from this (scalar) tensor: seeds d(self)/d(self) = 1 and
     * runs every recorded backward closure in reverse topological order.
     */
    void backward() {
        if (numel() != 1) throw ShapeError("backward() requires a scalar root");
        std::vector<Node*> order;
        std::unordered_set<Node*> seen;
        topo_sort(node_.get(), seen, order);
        for (Node* n : order) n->ensure_grad();
        node_->grad[0] = 1.0;
        for (auto it = order.rbegin(); it != order.rend(); ++it)
            if ((*it)->backward_fn) (*it)->backward_fn(**it);
    }

private:
    static void topo_sort(Node* n, std::unordered_set<Node*>& seen,
                          std::vector<Node*>& order) {
        // iterative DFS; recurrent graphs get deep
        struct Frame {
            Node* node;
            std::size_t next_parent;
        };
        std::vector<Frame> stack{{n, 0}};
        seen.insert(n);
        while (!stack.empty()) {
            Frame& f = stack.back();
            if (f.next_parent < f.node->parents.size()) {
                Node* p = f.node->parents[f.next_parent++].get();
                if (seen.insert(p).second) stack.push_back({p, 0});
            } else {
                order.push_back(f.node);
                stack.pop_back();
            }
        }
    }

    std::shared_ptr<Node> node_;
};

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": shape mismatch");
}

} // namespace knock::nn
