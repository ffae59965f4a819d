#pragma once

#include <cstdint>
#include <vector>

#include "kan/data.hpp"
#include "kan/rnn.hpp"
#include "kan/trainer.hpp"

namespace kan {

// Minibatch view: [batch][step] token ids plus labels.
struct Batch {
    std::vector<std::vector<int32_t>> tokens;
    std::vector<int32_t> labels;
};

Batch gather_batch(const std::vector<Document>& docs,
                   const std::vector<size_t>& indices);

// The full parameter bundle: knowledge-base GRU, accessibility GRU, task
// embedding table, shared AC head, one classification head per task, and
// the frozen word embeddings.
struct KanModel {
    size_t n_tasks = 0;
    size_t dims = 0;
    double s_max = 140.0;
    double dropout_keep = 0.5;
    GruParams kb;
    GruParams ac;
    Tensor ac_emb;  // [n_tasks, dims], rows ~U(-0.08, 0.08)
    DenseHead ac_head;
    std::vector<DenseHead> heads;
    Tensor embeddings;  // [vocab, dims], requires_grad = false
    std::vector<bool> task_trained;

    static KanModel init(size_t n_tasks, Tensor embeddings,
                         const Hyperparams& hp, Rng& rng);

    // Canonical parameter names: kb.gru.*, ac.gru.*, ac.emb, ac.head.*,
    // head.<task>.*.
    std::vector<NamedTensor> named_tensors() const;
    std::vector<NamedTensor> mcl_trainables(int32_t task) const;
    std::vector<NamedTensor> ac_trainables() const;
};

// FNV-1a over the raw bytes of the tensor data; used by the
// phase-discipline checks.
uint64_t fingerprint(const Tensor& t);
uint64_t fingerprint(const std::vector<NamedTensor>& ts);

// Annealing schedule for the mask scale within one epoch:
// s = 1/s_max + (s_max - 1/s_max) * (b - 1) / (B - 1), b in 1..B.
// A single-batch epoch uses s_max; B = 0 is an error.
double anneal_s(size_t b, size_t n_batches, double s_max);

// Differentiable soft mask sigma(s * e_t) as a [1, dims] tensor on the
// graph; gradients flow into row `task` of the table.
Tensor compute_mask(int32_t task, double s, const Tensor& ac_emb);

// sigma(s_max * e_t) thresholded at 0.5 to exact {0, 1}.
std::vector<double> binary_mask_from_emb(const KanModel& model, int32_t task);

// MCL/test-time mask: task 0 (and every task when forced) is all ones,
// otherwise the binarized retrieval mask.
std::vector<double> retrieve_mask(const KanModel& model, int32_t task,
                                  bool force_ones = false);

// Forward passes. The intermediate tensors stay exposed so invariants
// (gradient blocking, phase separation) are checkable from outside.
struct MclForward {
    std::vector<Tensor> kb_states;      // pre-mask hidden states
    std::vector<Tensor> masked_states;  // after the accessibility mask
    Tensor logits;
    Tensor loss;
};

MclForward mcl_forward(const KanModel& model, int32_t task,
                       const Batch& batch, const std::vector<double>& mask,
                       Mode mode, Rng& rng);

struct AcForward {
    Tensor mask;  // differentiable in train mode
    std::vector<Tensor> kb_states;
    std::vector<Tensor> masked_states;
    std::vector<Tensor> ac_states;
    Tensor logits;
    Tensor loss;
};

// Train mode: mask = sigma(s * AC-EMB(task)). Eval mode: the binarized
// retrieval mask, passed as a constant.
AcForward ac_forward(const KanModel& model, int32_t task, const Batch& batch,
                     double s, Mode mode, Rng& rng);
AcForward ac_forward_eval(const KanModel& model, const Batch& batch,
                          const std::vector<double>& mask);

// Deterministic class prediction for a trained task (binary retrieval mask,
// no dropout). Unknown/untrained task ids are errors.
int32_t predict(const KanModel& model, int32_t task, const Document& doc,
                bool force_ones_mask = false);

// MCL-head accuracy over a document set.
double mcl_accuracy(const KanModel& model, int32_t task,
                    const std::vector<Document>& docs, size_t batch_size,
                    bool force_ones_mask = false);

// AC-head accuracy with a fixed binary mask (used for AC-phase validation).
double ac_accuracy(const KanModel& model, int32_t task,
                   const std::vector<Document>& docs, size_t batch_size);

}  // namespace kan
