#include "kan/tensor.hpp"

#include <stdexcept>
#include <unordered_set>

#include "kan/errors.hpp"

namespace kan::ad {

Tensor Tensor::zeros(size_t r, size_t c, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->shape = {r, c};
    n->data.assign(r * c, 0.0);
    n->requires_grad = requires_grad;
    n->needs_grad = requires_grad;
    return Tensor(std::move(n));
}

Tensor Tensor::full(size_t r, size_t c, double value) {
    auto t = zeros(r, c, false);
    for (auto& v : t.data()) v = value;
    return t;
}

Tensor Tensor::from(size_t r, size_t c, std::vector<double> data,
                    bool requires_grad) {
    if (data.size() != r * c)
        throw ShapeError("Tensor::from: data size does not match shape");
    auto n = std::make_shared<Node>();
    n->shape = {r, c};
    n->data = std::move(data);
    n->requires_grad = requires_grad;
    n->needs_grad = requires_grad;
    return Tensor(std::move(n));
}

double Tensor::item() const {
    if (size() != 1) throw ShapeError("Tensor::item: tensor is not scalar");
    return n_->data[0];
}

void backward(const Tensor& loss) {
    if (loss.size() != 1)
        throw ShapeError("backward: loss must be a scalar tensor");

    // Iterative post-order DFS over parent links gives a topological order.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(loss.node(), 0);
    visited.insert(loss.node());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (visited.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    // Fresh zero gradients for interior nodes; leaves accumulate.
    for (Node* n : order) {
        if (!n->needs_grad) continue;
        if (n->is_leaf())
            n->ensure_grad();
        else
            n->grad.assign(n->data.size(), 0.0);
    }
    loss.node()->ensure_grad();
    loss.node()->grad[0] += 1.0;

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->needs_grad && n->backward_fn) n->backward_fn(*n);
    }
}

}  // namespace kan::ad
