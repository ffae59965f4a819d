#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

namespace kan::ad {

// One record in the computation graph. Nodes are created by the primitives
// in ops.hpp; parent links plus the backward closure define the local
// gradient rule. The DAG itself is the "tape": backward() walks it in
// reverse topological order exactly once.
struct Node {
    std::vector<size_t> shape;  // [rows, cols]
    std::vector<double> data;
    std::vector<double> grad;  // allocated lazily, same size as data
    bool requires_grad = false;  // leaf parameter flag
    bool needs_grad = false;     // lies on a path to some requires_grad leaf
    std::vector<std::shared_ptr<Node>> parents;
    // Reads this->grad, accumulates into parents' grad.
    std::function<void(Node&)> backward_fn;
    const char* op = "leaf";

    size_t rows() const { return shape[0]; }
    size_t cols() const { return shape[1]; }
    size_t size() const { return data.size(); }
    bool is_leaf() const { return parents.empty(); }
    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    }
};

// Value-semantics handle to a graph node.
class Tensor {
   public:
    Tensor() : n_(std::make_shared<Node>()) {
        n_->shape = {0, 0};
    }
    explicit Tensor(std::shared_ptr<Node> n) : n_(std::move(n)) {}

    static Tensor zeros(size_t r, size_t c, bool requires_grad = false);
    static Tensor full(size_t r, size_t c, double value);
    static Tensor from(size_t r, size_t c, std::vector<double> data,
                       bool requires_grad = false);
    static Tensor scalar(double v) { return from(1, 1, {v}); }

    const std::vector<size_t>& shape() const { return n_->shape; }
    size_t rows() const { return n_->rows(); }
    size_t cols() const { return n_->cols(); }
    size_t size() const { return n_->size(); }

    std::vector<double>& data() { return n_->data; }
    const std::vector<double>& data() const { return n_->data; }
    // Gradient accumulated by the last backward() pass (zeros if untouched).
    const std::vector<double>& grad() const {
        n_->ensure_grad();
        return n_->grad;
    }
    bool has_grad() const { return n_->grad.size() == n_->data.size(); }

    bool requires_grad() const { return n_->requires_grad; }
    void set_requires_grad(bool rg) {
        n_->requires_grad = rg;
        n_->needs_grad = rg || n_->needs_grad;
        if (!rg && n_->is_leaf()) n_->needs_grad = false;
    }
    void zero_grad() { n_->grad.assign(n_->data.size(), 0.0); }

    double item() const;  // scalar tensors only

    Node* node() const { return n_.get(); }
    std::shared_ptr<Node> ptr() const { return n_; }

    bool same_node(const Tensor& other) const { return n_ == other.n_; }

   private:
    std::shared_ptr<Node> n_;
};

// Reverse-mode sweep from a scalar loss. Gradients of leaf tensors
// accumulate additively across calls; callers zero them between steps.
void backward(const Tensor& loss);

}  // namespace kan::ad
