#pragma once

#include <cstdint>
#include <vector>

#include "kan/rng.hpp"
#include "kan/tensor.hpp"

namespace kan::ad {

// All primitives record the node on the graph with its local gradient rule.
// Shapes are [rows, cols]; a row tensor [1, n] broadcasts over the rows of
// an [m, n] operand where noted. Shape mismatches throw ShapeError naming
// the primitive and the offending shapes.

Tensor matmul(const Tensor& a, const Tensor& b);

// Elementwise; b may be [1, n] against a [m, n].
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

// k * a + c, elementwise.
Tensor affine(const Tensor& a, double k, double c);
inline Tensor scale(const Tensor& a, double k) { return affine(a, k, 0.0); }

Tensor sigmoid(const Tensor& a);
Tensor tanh_(const Tensor& a);

Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor slice_rows(const Tensor& a, size_t r0, size_t r1);

// Gathers rows of `table`; gradients scatter-add back into the table.
Tensor embedding_lookup(const Tensor& table, const std::vector<int32_t>& ids);

// Inverted dropout: train mode scales kept entries by 1/keep; eval mode is
// the identity (returns the input tensor itself).
Tensor dropout(const Tensor& a, double keep, Rng& rng, bool training);

// Mean over the batch of -log softmax(logits)[label]. Returns a scalar.
Tensor softmax_cross_entropy(const Tensor& logits,
                             const std::vector<int32_t>& labels);

Tensor sum(const Tensor& a);

}  // namespace kan::ad
