#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "covqa/errors.hpp"

namespace covqa {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t e : s) n *= e;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << "]";
    return os.str();
}

// Validity mask over one axis. Padding positions are invalid; attention and
// pooling must see at least one valid position.
class Mask {
  public:
    Mask() = default;
    explicit Mask(std::size_t length, bool valid = true)
        : bits_(length, valid ? std::uint8_t(1) : std::uint8_t(0)) {}
    static Mask from(std::vector<std::uint8_t> bits) {
        Mask m;
        m.bits_ = std::move(bits);
        return m;
    }

    std::size_t length() const { return bits_.size(); }
    bool valid(std::size_t i) const { return bits_[i] != 0; }
    void set(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }
    std::size_t count_valid() const {
        std::size_t c = 0;
        for (std::uint8_t b : bits_) c += b;
        return c;
    }
    bool any_valid() const {
        for (std::uint8_t b : bits_)
            if (b) return true;
        return false;
    }
    const std::vector<std::uint8_t>& bits() const { return bits_; }

  private:
    std::vector<std::uint8_t> bits_;
};

// One record in the computation graph. Tensors are thin handles over a
// shared node; reusing a tensor in two branches shares the node, so its
// gradient accumulates additively across uses.
template <typename T>
struct TensorNode {
    Shape shape;
    std::vector<T> values;
    std::vector<T> grad;  // sized lazily during backward
    bool requires_grad = false;
    const char* op = "leaf";
    std::vector<std::shared_ptr<TensorNode<T>>> parents;
    std::function<void()> backprop;  // pulls this->grad into parents' grads

    std::size_t size() const { return values.size(); }
    void ensure_grad() {
        if (grad.size() != values.size()) grad.assign(values.size(), T(0));
    }
};

template <typename T>
class Tensor {
  public:
    Tensor() = default;

    static Tensor zeros(Shape shape) {
        return Tensor(std::move(shape), {}, false, true);
    }
    static Tensor from(Shape shape, std::vector<T> values) {
        if (shape_numel(shape) != values.size())
            throw ShapeError("tensor: " + shape_str(shape) + " cannot hold " +
                             std::to_string(values.size()) + " values");
        Tensor t(std::move(shape), std::move(values), false, false);
        return t;
    }
    static Tensor scalar(T v) { return from({1}, {v}); }
    // Trainable leaf: participates in backward.
    static Tensor param(Shape shape, std::vector<T> values) {
        Tensor t = from(std::move(shape), std::move(values));
        t.node_->requires_grad = true;
        return t;
    }

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t size() const { return node_->values.size(); }
    std::size_t extent(std::size_t axis) const { return node_->shape[axis]; }

    const std::vector<T>& values() const { return node_->values; }
    std::vector<T>& values() { return node_->values; }
    const T* data() const { return node_->values.data(); }
    T* data() { return node_->values.data(); }
    T item() const {
        if (size() != 1)
            throw ContractError("item: tensor " + shape_str(shape()) + " is not scalar");
        return node_->values[0];
    }

    bool requires_grad() const { return node_->requires_grad; }
    bool has_grad() const { return !node_->grad.empty(); }
    const std::vector<T>& grad() const {
        if (node_->grad.empty())
            throw ContractError("grad: no gradient present; run backward first");
        return node_->grad;
    }
    std::vector<T>& grad_buffer() {
        node_->ensure_grad();
        return node_->grad;
    }
    void zero_grad() {
        if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), T(0));
    }

    std::shared_ptr<TensorNode<T>> node() const { return node_; }

    // Internal: op results. `parents` may be empty when no input needs grad.
    static Tensor make_op(const char* op, Shape shape, std::vector<T> values,
                          std::vector<std::shared_ptr<TensorNode<T>>> parents,
                          std::function<void()> backprop) {
        Tensor t(std::move(shape), std::move(values), false, false);
        t.node_->op = op;
        if (!parents.empty()) {
            t.node_->requires_grad = true;
            t.node_->parents = std::move(parents);
            t.node_->backprop = std::move(backprop);
        }
        return t;
    }

  private:
    Tensor(Shape shape, std::vector<T> values, bool requires_grad, bool fill_zero)
        : node_(std::make_shared<TensorNode<T>>()) {
        node_->shape = std::move(shape);
        if (fill_zero)
            node_->values.assign(shape_numel(node_->shape), T(0));
        else
            node_->values = std::move(values);
        node_->requires_grad = requires_grad;
    }

    std::shared_ptr<TensorNode<T>> node_;
};

// Reverse-mode sweep. Seeds d(loss)/d(loss) = 1 and visits every reachable
// node exactly once in reverse topological order. Gradients accumulate with
// += so tensors used in several branches receive the sum of branch grads.
template <typename T>
void backward(const Tensor<T>& loss) {
    if (loss.size() != 1)
        throw ContractError("backward: loss must be scalar, got " + shape_str(loss.shape()));

    using NodePtr = TensorNode<T>*;
    std::vector<NodePtr> order;
    std::unordered_set<NodePtr> seen;
    // Iterative DFS post-order; graphs can chain deeper than the stack likes.
    std::vector<std::pair<NodePtr, std::size_t>> stack;
    stack.emplace_back(loss.node().get(), 0);
    seen.insert(loss.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            NodePtr p = node->parents[next++].get();
            if (p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    for (NodePtr n : order) n->ensure_grad();
    loss.node()->grad[0] = T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backprop) (*it)->backprop();
    }
}

}  // namespace covqa
