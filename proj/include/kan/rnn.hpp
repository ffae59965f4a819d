#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kan/ops.hpp"
#include "kan/rng.hpp"
#include "kan/tensor.hpp"

namespace kan {

using ad::Tensor;

// Named parameter handle; the canonical names feed checkpoints and the
// phase-discipline checksums.
struct NamedTensor {
    std::string name;
    Tensor tensor;
};

// Update gate z, reset gate r, candidate h. Input weights are
// [input_dim, hidden_dim], recurrent weights [hidden_dim, hidden_dim],
// biases [1, hidden_dim].
struct GruParams {
    size_t input_dim = 0;
    size_t hidden_dim = 0;
    Tensor wz, uz, bz;
    Tensor wr, ur, br;
    Tensor wh, uh, bh;

    // Weights ~U(-0.08, 0.08), biases zero.
    static GruParams init(size_t input_dim, size_t hidden_dim, Rng& rng);

    std::vector<NamedTensor> named(const std::string& prefix) const;
    void set_requires_grad(bool rg);
};

// One GRU step: h' = (1 - z) * h_prev + z * candidate.
Tensor gru_cell(const Tensor& x, const Tensor& h_prev, const GruParams& p);

// Runs the GRU over precomputed per-step inputs; hidden state starts at 0.
// Returns the hidden state after each step.
std::vector<Tensor> run_gru(const std::vector<Tensor>& xs,
                            const GruParams& p);

enum class Mode { Train, Eval };

// Embeds each timestep of a [batch][step] token matrix, applies dropout
// between the embedding and the GRU, and runs the GRU. Token rows must all
// share the same length.
std::vector<Tensor> run_sequence(
    const std::vector<std::vector<int32_t>>& token_rows,
    const Tensor& embeddings, const GruParams& p, double dropout_keep,
    Mode mode, Rng& rng);

// Per-task binary classification head: [hidden_dim, 2] weights + bias.
struct DenseHead {
    Tensor w, b;

    static DenseHead init(size_t hidden_dim, size_t classes, Rng& rng);
    Tensor logits(const Tensor& h) const;
    std::vector<NamedTensor> named(const std::string& prefix) const;
};

}  // namespace kan
