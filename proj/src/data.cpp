#include "kan/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <json.hpp>

#include "kan/errors.hpp"

namespace kan {

using nlohmann::json;

int32_t Vocab::add(const std::string& token) {
    auto [it, inserted] =
        token_to_id.emplace(token, static_cast<int32_t>(id_to_token.size()));
    if (inserted) id_to_token.push_back(token);
    return it->second;
}

uint64_t Vocab::hash() const {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& tok : id_to_token) {
        for (unsigned char ch : tok) {
            h ^= ch;
            h *= 0x100000001b3ULL;
        }
        h ^= 0x1f;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

// ASCII whitespace plus the common Unicode space code points, matched on
// UTF-8 byte sequences. Returns the byte length of the separator at `i`,
// or 0 if text[i] does not start one.
size_t space_len(const std::string& s, size_t i) {
    unsigned char c = s[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
        c == '\v')
        return 1;
    if (c == 0xC2 && i + 1 < s.size() &&
        static_cast<unsigned char>(s[i + 1]) == 0xA0)
        return 2;  // U+00A0
    if (c == 0xE2 && i + 2 < s.size()) {
        unsigned char c1 = s[i + 1], c2 = s[i + 2];
        if (c1 == 0x80 && ((c2 >= 0x80 && c2 <= 0x8A) || c2 == 0xA8 ||
                           c2 == 0xA9 || c2 == 0xAF))
            return 3;  // U+2000..200A, U+2028, U+2029, U+202F
        if (c1 == 0x81 && c2 == 0x9F) return 3;  // U+205F
    }
    if (c == 0xE3 && i + 2 < s.size() &&
        static_cast<unsigned char>(s[i + 1]) == 0x80 &&
        static_cast<unsigned char>(s[i + 2]) == 0x80)
        return 3;  // U+3000
    return 0;
}

bool ascii_punct(char c) {
    return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        size_t b = 0, e = cur.size();
        while (b < e && ascii_punct(cur[b])) ++b;
        while (e > b && ascii_punct(cur[e - 1])) --e;
        if (e > b) tokens.push_back(cur.substr(b, e - b));
        cur.clear();
    };
    for (size_t i = 0; i < text.size();) {
        size_t sl = space_len(text, i);
        if (sl > 0) {
            flush();
            i += sl;
        } else {
            cur.push_back(static_cast<char>(
                std::tolower(static_cast<unsigned char>(text[i]))));
            ++i;
        }
    }
    flush();
    if (tokens.empty())
        throw EmptyDocumentError("tokenize: document has no tokens");
    return tokens;
}

RawTask load_task_file(const std::string& path, size_t* skipped) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus file: " + path);
    RawTask task;
    task.name = std::filesystem::path(path).stem().string();
    std::string line;
    size_t line_no = 0;
    size_t skip_count = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object())
            throw DataError(path + ":" + std::to_string(line_no) +
                            ": malformed JSON record");
        if (!rec.contains("text") || !rec["text"].is_string())
            throw DataError(path + ":" + std::to_string(line_no) +
                            ": missing or non-string \"text\"");
        if (!rec.contains("label") || !rec["label"].is_string())
            throw DataError(path + ":" + std::to_string(line_no) +
                            ": missing or non-string \"label\"");
        const std::string label = rec["label"].get<std::string>();
        if (label != "pos" && label != "neg")
            throw DataError(path + ":" + std::to_string(line_no) +
                            ": label must be \"pos\" or \"neg\"");
        RawDoc doc;
        doc.label = label == "pos" ? 1 : 0;
        try {
            doc.tokens = tokenize(rec["text"].get<std::string>());
        } catch (const EmptyDocumentError&) {
            std::cerr << "warning: " << path << ":" << line_no
                      << ": empty document skipped\n";
            ++skip_count;
            continue;
        }
        task.docs.push_back(std::move(doc));
    }
    if (skipped) *skipped = skip_count;
    return task;
}

Splits<RawDoc> split_task(const std::vector<RawDoc>& docs, uint64_t seed) {
    std::vector<size_t> pos, neg;
    for (size_t i = 0; i < docs.size(); ++i)
        (docs[i].label == 1 ? pos : neg).push_back(i);
    if (pos.empty() || neg.empty())
        throw DataError("split_task: both labels must be present");

    Rng rng(mix_seed(seed, 0x5917));
    rng.shuffle(pos);
    rng.shuffle(neg);

    // Interleave labels so every prefix stays balanced to within one doc,
    // then cut 8:1:1 over the interleaved order.
    std::vector<size_t> order;
    order.reserve(docs.size());
    for (size_t i = 0; i < std::max(pos.size(), neg.size()); ++i) {
        if (i < pos.size()) order.push_back(pos[i]);
        if (i < neg.size()) order.push_back(neg[i]);
    }
    const size_t n = order.size();
    const size_t n_train = n * 8 / 10;
    const size_t n_valid = n / 10;
    Splits<RawDoc> out;
    for (size_t i = 0; i < n; ++i) {
        const RawDoc& d = docs[order[i]];
        if (i < n_train)
            out.train.push_back(d);
        else if (i < n_train + n_valid)
            out.valid.push_back(d);
        else
            out.test.push_back(d);
    }
    return out;
}

Vocab build_vocab(const std::vector<Splits<RawDoc>>& tasks, size_t min_freq) {
    // std::map keeps insertion order independent of hashing details
    std::map<std::string, size_t> freq;
    for (const auto& t : tasks)
        for (const auto& d : t.train)
            for (const auto& tok : d.tokens) ++freq[tok];
    Vocab v;
    for (const auto& [tok, f] : freq)
        if (f >= min_freq) v.add(tok);
    return v;
}

Document encode_document(const RawDoc& doc, const Vocab& vocab, size_t step) {
    Document out;
    out.label = doc.label;
    out.raw_len = doc.tokens.size();
    out.tokens.assign(step, Vocab::kPad);
    // truncate from the end, then right-align
    const size_t keep = std::min(doc.tokens.size(), step);
    for (size_t i = 0; i < keep; ++i)
        out.tokens[step - keep + i] = vocab.id(doc.tokens[i]);
    return out;
}

TaskDataset encode_task(const std::string& name, const Splits<RawDoc>& splits,
                        const Vocab& vocab, size_t step) {
    TaskDataset out;
    out.name = name;
    for (const auto& d : splits.train)
        out.train.push_back(encode_document(d, vocab, step));
    for (const auto& d : splits.valid)
        out.valid.push_back(encode_document(d, vocab, step));
    for (const auto& d : splits.test)
        out.test.push_back(encode_document(d, vocab, step));
    return out;
}

std::vector<std::vector<size_t>> make_batches(size_t n, size_t batch_size,
                                              uint64_t seed, size_t epoch) {
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(mix_seed(seed, 0xBA7C4 + epoch));
    rng.shuffle(order);
    std::vector<std::vector<size_t>> batches;
    for (size_t i = 0; i < n; i += batch_size) {
        batches.emplace_back(order.begin() + i,
                             order.begin() + std::min(i + batch_size, n));
    }
    return batches;
}

ad::Tensor load_embeddings(const std::string& path, const Vocab& vocab,
                           size_t dim, uint64_t seed) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open embedding file: " + path);

    std::vector<double> matrix(vocab.size() * dim, 0.0);
    std::vector<bool> found(vocab.size(), false);
    found[Vocab::kPad] = true;  // PAD stays zero

    std::string line;
    size_t line_no = 0;
    std::vector<double> row(dim);
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        size_t sp = line.find(' ');
        if (sp == std::string::npos)
            throw DataError(path + ":" + std::to_string(line_no) +
                            ": malformed embedding line");
        const std::string token = line.substr(0, sp);
        auto it = vocab.token_to_id.find(token);
        const char* p = line.c_str() + sp;
        size_t count = 0;
        while (*p) {
            while (*p == ' ') ++p;
            if (!*p) break;
            char* end = nullptr;
            double v = std::strtod(p, &end);
            if (end == p)
                throw DataError(path + ":" + std::to_string(line_no) +
                                ": malformed embedding value");
            if (count < dim) row[count] = v;
            ++count;
            p = end;
        }
        if (count != dim)
            throw DataError(path + ":" + std::to_string(line_no) + ": " +
                            std::to_string(count) + " values, expected " +
                            std::to_string(dim));
        if (it != vocab.token_to_id.end() && it->second != Vocab::kPad) {
            std::copy(row.begin(), row.end(),
                      matrix.begin() + it->second * dim);
            found[it->second] = true;
        }
    }

    // Seeded random rows for vocabulary tokens missing from the file, drawn
    // in id order so reruns are identical.
    Rng rng(mix_seed(seed, 0xE3B));
    for (size_t i = 0; i < vocab.size(); ++i) {
        if (found[i]) continue;
        for (size_t j = 0; j < dim; ++j)
            matrix[i * dim + j] = rng.uniform(-0.25, 0.25);
    }
    return ad::Tensor::from(vocab.size(), dim, std::move(matrix), false);
}

ad::Tensor random_embeddings(const Vocab& vocab, size_t dim, uint64_t seed) {
    Rng rng(mix_seed(seed, 0xE3B));
    std::vector<double> matrix(vocab.size() * dim, 0.0);
    for (size_t i = Vocab::kPad + 1; i < vocab.size(); ++i)
        for (size_t j = 0; j < dim; ++j)
            matrix[i * dim + j] = rng.uniform(-0.25, 0.25);
    return ad::Tensor::from(vocab.size(), dim, std::move(matrix), false);
}

std::vector<RawTask> gen_synthetic_tasks(const SyntheticSpec& spec) {
    if (spec.share < 0.0 || spec.share > 1.0)
        throw DataError("gen_synthetic_tasks: share must be in [0, 1]");
    if (spec.conflict < 0.0 || spec.conflict > 1.0)
        throw DataError("gen_synthetic_tasks: conflict must be in [0, 1]");
    if (spec.doc_len_min < 3 || spec.doc_len_max < spec.doc_len_min)
        throw DataError("gen_synthetic_tasks: bad document length range");

    auto name_token = [](const std::string& prefix, size_t i) {
        return prefix + std::to_string(i);
    };
    // A `conflict` fraction of the shared cues carry the opposite polarity in
    // a given task: the same token means "good" in one task and "bad" in
    // another. Decided by a stateless hash so conflict = 0 reproduces the
    // exact token streams of earlier versions.
    auto flipped = [&](size_t task, size_t cue) {
        if (spec.conflict <= 0.0) return false;
        const uint64_t h = mix_seed(mix_seed(spec.seed, 0xF11B + task), cue);
        return static_cast<double>(h >> 11) * 0x1.0p-53 < spec.conflict;
    };

    std::vector<RawTask> tasks;
    Rng rng(mix_seed(spec.seed, 0x57AE));
    for (size_t t = 0; t < spec.n_tasks; ++t) {
        RawTask task;
        task.name = "synthetic" + std::to_string(t);
        for (size_t d = 0; d < spec.n_docs; ++d) {
            const int32_t label = static_cast<int32_t>(d % 2);
            const size_t len =
                spec.doc_len_min +
                rng.index(spec.doc_len_max - spec.doc_len_min + 1);
            const size_t n_cues = 2 + rng.index(2);        // 2..3 cues
            const size_t n_opp = rng.index((n_cues + 1) / 2);  // strict minority
            RawDoc doc;
            doc.label = label;
            for (size_t i = 0; i < n_cues; ++i) {
                const bool opposite = i < n_opp;
                const int polarity = opposite ? 1 - label : label;
                const std::string pol = polarity == 1 ? "pos" : "neg";
                if (rng.u01() < spec.share) {
                    const size_t cue = rng.index(spec.n_shared_cues);
                    // a flipped cue of polarity p is spelled with the
                    // opposite pool's name, so its global spelling carries p
                    // only inside this task
                    const std::string spelled =
                        flipped(t, cue) ? (polarity == 1 ? "neg" : "pos")
                                        : pol;
                    doc.tokens.push_back(name_token(spelled + "shared", cue));
                } else
                    doc.tokens.push_back(
                        name_token(pol + "task" + std::to_string(t) + "x",
                                   rng.index(spec.n_task_cues)));
            }
            while (doc.tokens.size() < len)
                doc.tokens.push_back(
                    name_token("filler", rng.index(spec.n_neutral)));
            rng.shuffle(doc.tokens);
            task.docs.push_back(std::move(doc));
        }
        tasks.push_back(std::move(task));
    }
    return tasks;
}

Corpus prepare_corpus(const std::vector<RawTask>& raw, size_t step,
                      uint64_t seed, size_t min_freq) {
    std::vector<Splits<RawDoc>> splits;
    splits.reserve(raw.size());
    for (size_t i = 0; i < raw.size(); ++i)
        splits.push_back(split_task(raw[i].docs, mix_seed(seed, i)));
    Corpus corpus;
    corpus.vocab = build_vocab(splits, min_freq);
    for (size_t i = 0; i < raw.size(); ++i)
        corpus.tasks.push_back(
            encode_task(raw[i].name, splits[i], corpus.vocab, step));
    return corpus;
}

}  // namespace kan
