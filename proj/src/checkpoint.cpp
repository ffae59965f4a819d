#include "kan/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include "kan/errors.hpp"

namespace kan {

using nlohmann::json;

namespace {

std::string encode_doubles(const std::vector<double>& values) {
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(values.size() * 16);
    for (double v : values) {
        uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        for (int i = 15; i >= 0; --i)
            out.push_back(hex[(bits >> (4 * i)) & 0xf]);
    }
    return out;
}

std::vector<double> decode_doubles(const std::string& s) {
    if (s.size() % 16 != 0)
        throw DataError("checkpoint: malformed tensor data");
    std::vector<double> out(s.size() / 16);
    for (size_t i = 0; i < out.size(); ++i) {
        uint64_t bits = 0;
        for (size_t j = 0; j < 16; ++j) {
            const char c = s[i * 16 + j];
            const uint64_t nib = c >= '0' && c <= '9'   ? c - '0'
                                 : c >= 'a' && c <= 'f' ? c - 'a' + 10
                                                        : 16;
            if (nib == 16)
                throw DataError("checkpoint: malformed tensor data");
            bits = (bits << 4) | nib;
        }
        std::memcpy(&out[i], &bits, sizeof(double));
    }
    return out;
}

json tensor_to_json(const Tensor& t) {
    return json{{"shape", t.shape()}, {"data", encode_doubles(t.data())}};
}

void tensor_from_json(const json& j, Tensor& t) {
    auto shape = j.at("shape").get<std::vector<size_t>>();
    auto data = decode_doubles(j.at("data").get<std::string>());
    if (shape.size() != 2 || shape[0] * shape[1] != data.size())
        throw DataError("checkpoint: tensor shape/data mismatch");
    const bool rg = t.requires_grad();
    t = Tensor::from(shape[0], shape[1], std::move(data), rg);
}

}  // namespace

json hyperparams_to_json(const Hyperparams& hp) {
    return json{{"lr", hp.lr},
                {"batch_size", hp.batch_size},
                {"patience", hp.patience},
                {"s_max", hp.s_max},
                {"dropout_keep", hp.dropout_keep},
                {"dims", hp.dims},
                {"max_epochs", hp.max_epochs},
                {"step", hp.step}};
}

Hyperparams hyperparams_from_json(const json& j) {
    Hyperparams hp;
    if (!j.is_object()) throw ConfigError("hyperparams: expected an object");
    for (auto& [key, value] : j.items()) {
        if (key == "lr") hp.lr = value.get<double>();
        else if (key == "batch_size") hp.batch_size = value.get<size_t>();
        else if (key == "patience") hp.patience = value.get<size_t>();
        else if (key == "s_max") hp.s_max = value.get<double>();
        else if (key == "dropout_keep") hp.dropout_keep = value.get<double>();
        else if (key == "dims") hp.dims = value.get<size_t>();
        else if (key == "max_epochs") hp.max_epochs = value.get<size_t>();
        else if (key == "step") hp.step = value.get<size_t>();
        else throw ConfigError("hyperparams: unknown key \"" + key + "\"");
    }
    hp.validate();
    return hp;
}

void save_checkpoint(const std::string& path, const KanModel& model,
                     uint64_t vocab_hash, const Hyperparams& hp,
                     const json* extra) {
    json tensors;
    for (const auto& nt : model.named_tensors())
        tensors[nt.name] = tensor_to_json(nt.tensor);
    tensors["emb"] = tensor_to_json(model.embeddings);

    json j{{"schema_version", kCheckpointSchemaVersion},
           {"vocab_hash", vocab_hash},
           {"hyperparams", hyperparams_to_json(hp)},
           {"n_tasks", model.n_tasks},
           {"task_trained", model.task_trained},
           {"tensors", tensors}};
    if (extra) j["run_state"] = *extra;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out << j.dump() << '\n';
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw DataError("malformed checkpoint: " + path);
    if (j.value("schema_version", -1) != kCheckpointSchemaVersion)
        throw DataError("checkpoint schema version mismatch in " + path);

    LoadedCheckpoint cp;
    cp.vocab_hash = j.at("vocab_hash").get<uint64_t>();
    cp.hp = hyperparams_from_json(j.at("hyperparams"));
    cp.extra = j.value("run_state", json());

    const json& tensors = j.at("tensors");
    KanModel& m = cp.model;
    m.n_tasks = j.at("n_tasks").get<size_t>();
    m.dims = cp.hp.dims;
    m.s_max = cp.hp.s_max;
    m.dropout_keep = cp.hp.dropout_keep;
    m.task_trained = j.at("task_trained").get<std::vector<bool>>();

    // rebuild the parameter skeleton, then fill each tensor by name
    Rng zero(0);
    m.kb = GruParams::init(m.dims, m.dims, zero);
    m.ac = GruParams::init(m.dims, m.dims, zero);
    m.ac_emb = Tensor::zeros(m.n_tasks, m.dims, true);
    m.ac_head = DenseHead::init(m.dims, 2, zero);
    m.heads.assign(m.n_tasks, DenseHead());
    for (auto& h : m.heads) h = DenseHead::init(m.dims, 2, zero);

    for (auto& nt : m.named_tensors()) {
        if (!tensors.contains(nt.name))
            throw DataError("checkpoint missing tensor " + nt.name);
    }
    // named_tensors() returns copies of handles; mutate through the model
    auto fill = [&](const std::string& name, Tensor& t) {
        tensor_from_json(tensors.at(name), t);
    };
    fill("kb.gru.wz", m.kb.wz); fill("kb.gru.uz", m.kb.uz); fill("kb.gru.bz", m.kb.bz);
    fill("kb.gru.wr", m.kb.wr); fill("kb.gru.ur", m.kb.ur); fill("kb.gru.br", m.kb.br);
    fill("kb.gru.wh", m.kb.wh); fill("kb.gru.uh", m.kb.uh); fill("kb.gru.bh", m.kb.bh);
    fill("ac.gru.wz", m.ac.wz); fill("ac.gru.uz", m.ac.uz); fill("ac.gru.bz", m.ac.bz);
    fill("ac.gru.wr", m.ac.wr); fill("ac.gru.ur", m.ac.ur); fill("ac.gru.br", m.ac.br);
    fill("ac.gru.wh", m.ac.wh); fill("ac.gru.uh", m.ac.uh); fill("ac.gru.bh", m.ac.bh);
    fill("ac.emb", m.ac_emb);
    fill("ac.head.w", m.ac_head.w); fill("ac.head.b", m.ac_head.b);
    for (size_t t = 0; t < m.n_tasks; ++t) {
        fill("head." + std::to_string(t) + ".w", m.heads[t].w);
        fill("head." + std::to_string(t) + ".b", m.heads[t].b);
    }
    {
        Tensor emb;
        emb.set_requires_grad(false);
        tensor_from_json(tensors.at("emb"), emb);
        m.embeddings = emb;
    }
    return cp;
}

}  // namespace kan
