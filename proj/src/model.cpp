#include "kan/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "kan/errors.hpp"
#include "kan/ops.hpp"

namespace kan {

using namespace ad;

Batch gather_batch(const std::vector<Document>& docs,
                   const std::vector<size_t>& indices) {
    Batch b;
    b.tokens.reserve(indices.size());
    b.labels.reserve(indices.size());
    for (size_t i : indices) {
        b.tokens.push_back(docs[i].tokens);
        b.labels.push_back(docs[i].label);
    }
    return b;
}

KanModel KanModel::init(size_t n_tasks, Tensor embeddings,
                        const Hyperparams& hp, Rng& rng) {
    if (n_tasks == 0) throw ConfigError("KanModel: need at least one task");
    KanModel m;
    m.n_tasks = n_tasks;
    m.dims = hp.dims;
    m.s_max = hp.s_max;
    m.dropout_keep = hp.dropout_keep;
    m.embeddings = std::move(embeddings);
    if (m.embeddings.cols() != hp.dims)
        throw ShapeError("KanModel: embedding dim " +
                         std::to_string(m.embeddings.cols()) + " != dims " +
                         std::to_string(hp.dims));
    m.kb = GruParams::init(hp.dims, hp.dims, rng);
    m.ac = GruParams::init(hp.dims, hp.dims, rng);
    {
        std::vector<double> table(n_tasks * hp.dims);
        for (auto& v : table) v = rng.uniform(-0.08, 0.08);
        m.ac_emb = Tensor::from(n_tasks, hp.dims, std::move(table), true);
    }
    m.ac_head = DenseHead::init(hp.dims, 2, rng);
    m.heads.reserve(n_tasks);
    for (size_t t = 0; t < n_tasks; ++t)
        m.heads.push_back(DenseHead::init(hp.dims, 2, rng));
    m.task_trained.assign(n_tasks, false);
    return m;
}

std::vector<NamedTensor> KanModel::named_tensors() const {
    std::vector<NamedTensor> out = kb.named("kb.gru");
    for (auto& nt : ac.named("ac.gru")) out.push_back(nt);
    out.push_back({"ac.emb", ac_emb});
    for (auto& nt : ac_head.named("ac.head")) out.push_back(nt);
    for (size_t t = 0; t < heads.size(); ++t)
        for (auto& nt : heads[t].named("head." + std::to_string(t)))
            out.push_back(nt);
    return out;
}

std::vector<NamedTensor> KanModel::mcl_trainables(int32_t task) const {
    auto out = kb.named("kb.gru");
    for (auto& nt : heads.at(task).named("head." + std::to_string(task)))
        out.push_back(nt);
    return out;
}

std::vector<NamedTensor> KanModel::ac_trainables() const {
    auto out = ac.named("ac.gru");
    out.push_back({"ac.emb", ac_emb});
    for (auto& nt : ac_head.named("ac.head")) out.push_back(nt);
    return out;
}

uint64_t fingerprint(const Tensor& t) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (double v : t.data()) {
        uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

uint64_t fingerprint(const std::vector<NamedTensor>& ts) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& nt : ts) {
        h ^= fingerprint(nt.tensor);
        h *= 0x100000001b3ULL;
    }
    return h;
}

double anneal_s(size_t b, size_t n_batches, double s_max) {
    if (n_batches == 0)
        throw std::invalid_argument("anneal_s: zero batches");
    if (b < 1 || b > n_batches)
        throw std::invalid_argument("anneal_s: batch index out of range");
    if (n_batches == 1) return s_max;  // single-batch epoch
    return 1.0 / s_max + (s_max - 1.0 / s_max) * static_cast<double>(b - 1) /
                             static_cast<double>(n_batches - 1);
}

Tensor compute_mask(int32_t task, double s, const Tensor& ac_emb) {
    if (task < 0 || static_cast<size_t>(task) >= ac_emb.rows())
        throw std::out_of_range("compute_mask: unknown task id " +
                                std::to_string(task));
    if (s <= 0.0)
        throw std::invalid_argument("compute_mask: s must be positive");
    Tensor e = embedding_lookup(ac_emb, {task});
    return sigmoid(scale(e, s));
}

std::vector<double> binary_mask_from_emb(const KanModel& model,
                                         int32_t task) {
    if (task < 0 || static_cast<size_t>(task) >= model.n_tasks)
        throw std::out_of_range("binary_mask_from_emb: unknown task id " +
                                std::to_string(task));
    std::vector<double> mask(model.dims);
    for (size_t j = 0; j < model.dims; ++j) {
        const double e = model.ac_emb.data()[task * model.dims + j];
        const double soft = 1.0 / (1.0 + std::exp(-model.s_max * e));
        mask[j] = soft > 0.5 ? 1.0 : 0.0;
    }
    return mask;
}

std::vector<double> retrieve_mask(const KanModel& model, int32_t task,
                                  bool force_ones) {
    if (task < 0 || static_cast<size_t>(task) >= model.n_tasks)
        throw std::out_of_range("retrieve_mask: unknown task id " +
                                std::to_string(task));
    // The first task learns with an all-ones mask, so it is also read back
    // with one.
    if (force_ones || task == 0) return std::vector<double>(model.dims, 1.0);
    return binary_mask_from_emb(model, task);
}

namespace {

std::vector<Tensor> mask_states(const std::vector<Tensor>& states,
                                const Tensor& mask) {
    std::vector<Tensor> out;
    out.reserve(states.size());
    for (const Tensor& h : states) out.push_back(mul(h, mask));
    return out;
}

}  // namespace

MclForward mcl_forward(const KanModel& model, int32_t task,
                       const Batch& batch, const std::vector<double>& mask,
                       Mode mode, Rng& rng) {
    MclForward f;
    f.kb_states = run_sequence(batch.tokens, model.embeddings, model.kb,
                               model.dropout_keep, mode, rng);
    Tensor mask_t = Tensor::from(1, model.dims, mask);
    f.masked_states = mask_states(f.kb_states, mask_t);
    f.logits = model.heads.at(task).logits(f.masked_states.back());
    f.loss = softmax_cross_entropy(f.logits, batch.labels);
    return f;
}

AcForward ac_forward(const KanModel& model, int32_t task, const Batch& batch,
                     double s, Mode mode, Rng& rng) {
    AcForward f;
    f.mask = compute_mask(task, s, model.ac_emb);
    f.kb_states = run_sequence(batch.tokens, model.embeddings, model.kb,
                               model.dropout_keep, mode, rng);
    f.masked_states = mask_states(f.kb_states, f.mask);
    f.ac_states = run_gru(f.masked_states, model.ac);
    f.logits = model.ac_head.logits(f.ac_states.back());
    f.loss = softmax_cross_entropy(f.logits, batch.labels);
    return f;
}

AcForward ac_forward_eval(const KanModel& model, const Batch& batch,
                          const std::vector<double>& mask) {
    AcForward f;
    f.mask = Tensor::from(1, model.dims, mask);
    Rng unused(0);
    f.kb_states = run_sequence(batch.tokens, model.embeddings, model.kb, 1.0,
                               Mode::Eval, unused);
    f.masked_states = mask_states(f.kb_states, f.mask);
    f.ac_states = run_gru(f.masked_states, model.ac);
    f.logits = model.ac_head.logits(f.ac_states.back());
    f.loss = softmax_cross_entropy(f.logits, batch.labels);
    return f;
}

namespace {

int32_t argmax2(const std::vector<double>& logits, size_t row) {
    return logits[2 * row] >= logits[2 * row + 1] ? 0 : 1;
}

Batch slice_docs(const std::vector<Document>& docs, size_t lo, size_t hi) {
    Batch b;
    for (size_t j = lo; j < hi; ++j) {
        b.tokens.push_back(docs[j].tokens);
        b.labels.push_back(docs[j].label);
    }
    return b;
}

}  // namespace

int32_t predict(const KanModel& model, int32_t task, const Document& doc,
                bool force_ones_mask) {
    if (task < 0 || static_cast<size_t>(task) >= model.n_tasks ||
        !model.task_trained[task])
        throw std::out_of_range("predict: unknown or untrained task id " +
                                std::to_string(task));
    Batch b;
    b.tokens.push_back(doc.tokens);
    b.labels.push_back(doc.label);
    Rng unused(0);
    auto mask = retrieve_mask(model, task, force_ones_mask);
    MclForward f = mcl_forward(model, task, b, mask, Mode::Eval, unused);
    return argmax2(f.logits.data(), 0);
}

double mcl_accuracy(const KanModel& model, int32_t task,
                    const std::vector<Document>& docs, size_t batch_size,
                    bool force_ones_mask) {
    if (docs.empty()) throw DataError("mcl_accuracy: empty document set");
    const auto mask = retrieve_mask(model, task, force_ones_mask);
    Rng unused(0);
    size_t correct = 0;
    for (size_t i = 0; i < docs.size(); i += batch_size) {
        Batch b = slice_docs(docs, i, std::min(i + batch_size, docs.size()));
        MclForward f = mcl_forward(model, task, b, mask, Mode::Eval, unused);
        for (size_t r = 0; r < b.labels.size(); ++r)
            if (argmax2(f.logits.data(), r) == b.labels[r]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(docs.size());
}

double ac_accuracy(const KanModel& model, int32_t task,
                   const std::vector<Document>& docs, size_t batch_size) {
    if (docs.empty()) throw DataError("ac_accuracy: empty document set");
    const auto mask = binary_mask_from_emb(model, task);
    size_t correct = 0;
    for (size_t i = 0; i < docs.size(); i += batch_size) {
        Batch b = slice_docs(docs, i, std::min(i + batch_size, docs.size()));
        AcForward f = ac_forward_eval(model, b, mask);
        for (size_t r = 0; r < b.labels.size(); ++r)
            if (argmax2(f.logits.data(), r) == b.labels[r]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(docs.size());
}

}  // namespace kan
