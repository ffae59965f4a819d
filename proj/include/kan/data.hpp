#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "kan/rng.hpp"
#include "kan/tensor.hpp"

namespace kan {

// ---- raw layer (before vocabulary encoding) --------------------------------

struct RawDoc {
    std::vector<std::string> tokens;
    int32_t label = 0;  // 0 = negative, 1 = positive
};

struct RawTask {
    std::string name;
    std::vector<RawDoc> docs;
};

template <typename DocT>
struct Splits {
    std::vector<DocT> train, valid, test;
};

// ---- encoded layer ----------------------------------------------------------

struct Document {
    std::vector<int32_t> tokens;  // right-aligned to `step`, PAD-filled
    int32_t label = 0;
    size_t raw_len = 0;
};

struct TaskDataset {
    std::string name;
    std::vector<Document> train, valid, test;
};

struct Vocab {
    static constexpr int32_t kPad = 0;
    static constexpr int32_t kUnk = 1;

    std::unordered_map<std::string, int32_t> token_to_id;
    std::vector<std::string> id_to_token{"<pad>", "<unk>"};

    size_t size() const { return id_to_token.size(); }
    int32_t id(const std::string& token) const {
        auto it = token_to_id.find(token);
        return it == token_to_id.end() ? kUnk : it->second;
    }
    int32_t add(const std::string& token);
    uint64_t hash() const;  // FNV-1a over tokens in id order
};

// ---- operations -------------------------------------------------------------

// Lowercases, splits on whitespace (ASCII plus common Unicode spaces),
// strips leading/trailing ASCII punctuation per token, drops empties.
// Throws EmptyDocumentError when nothing survives.
std::vector<std::string> tokenize(const std::string& text);

// Line-delimited JSON {"text":..., "label":"pos"|"neg"}; task name is the
// file stem. Documents that tokenize to nothing are skipped with a warning
// counted in `skipped` when given.
RawTask load_task_file(const std::string& path, size_t* skipped = nullptr);

// Per-label seeded shuffle, label-interleaved, then 8:1:1 partition. Errors
// if either label is absent.
Splits<RawDoc> split_task(const std::vector<RawDoc>& docs, uint64_t seed);

// Frequency >= min_freq over the training splits of every task.
Vocab build_vocab(const std::vector<Splits<RawDoc>>& tasks,
                  size_t min_freq = 2);

// Right-aligns to `step` (PAD on the left), truncating from the end.
Document encode_document(const RawDoc& doc, const Vocab& vocab, size_t step);

TaskDataset encode_task(const std::string& name, const Splits<RawDoc>& splits,
                        const Vocab& vocab, size_t step);

// Index batches over n items; reshuffled per (seed, epoch); the final short
// batch is kept.
std::vector<std::vector<size_t>> make_batches(size_t n, size_t batch_size,
                                              uint64_t seed, size_t epoch);

// GloVe-style text file: token followed by `dim` decimals per line. PAD row
// is zero; tokens absent from the file get a seeded row ~U(-0.25, 0.25).
// The returned matrix is frozen (requires_grad = false).
ad::Tensor load_embeddings(const std::string& path, const Vocab& vocab,
                           size_t dim, uint64_t seed);

// Random fallback for synthetic runs: rows ~U(-0.25, 0.25), PAD row zero.
ad::Tensor random_embeddings(const Vocab& vocab, size_t dim, uint64_t seed);

// ---- synthetic task family --------------------------------------------------

struct SyntheticSpec {
    size_t n_tasks = 6;
    size_t n_docs = 600;  // per task, half positive / half negative
    double share = 0.8;   // fraction of cue draws from the shared lexicon
    double conflict = 0.0;  // fraction of shared cues with task-flipped polarity
    size_t n_neutral = 100;
    size_t n_shared_cues = 60;  // per polarity
    size_t n_task_cues = 15;    // per polarity per task
    size_t doc_len_min = 8;
    size_t doc_len_max = 20;
    uint64_t seed = 0;
};

// Documents mix neutral tokens with positive/negative cue tokens; the label
// is the majority cue polarity. Byte-identical output for a fixed spec.
std::vector<RawTask> gen_synthetic_tasks(const SyntheticSpec& spec);

// ---- whole-corpus convenience ------------------------------------------------

struct Corpus {
    Vocab vocab;
    std::vector<TaskDataset> tasks;
};

// split + vocab + encode in the canonical order (vocabulary from the union
// of all tasks' training splits, ids stable for the whole experiment).
Corpus prepare_corpus(const std::vector<RawTask>& raw, size_t step,
                      uint64_t seed, size_t min_freq = 2);

}  // namespace kan
