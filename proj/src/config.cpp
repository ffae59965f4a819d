#include "kan/config.hpp"

#include <fstream>

#include "kan/checkpoint.hpp"
#include "kan/errors.hpp"
#include "kan/eval.hpp"

namespace kan {

using nlohmann::json;

void RunConfig::validate() const {
    if (out_dir.empty()) throw ConfigError("config: out_dir is required");
    if (prepared_dir.has_value() == synthetic.has_value())
        throw ConfigError(
            "config: exactly one of data.prepared / data.synthetic required");
    if (models.empty()) throw ConfigError("config: at least one model");
    if (n_sequences == 0)
        throw ConfigError("config: n_sequences must be positive");
    hp.validate();
    if (synthetic) {
        if (synthetic->share < 0.0 || synthetic->share > 1.0)
            throw ConfigError("config: synthetic share must be in [0, 1]");
        if (synthetic->conflict < 0.0 || synthetic->conflict > 1.0)
            throw ConfigError("config: synthetic conflict must be in [0, 1]");
        if (synthetic->n_tasks == 0 || synthetic->n_docs < 10)
            throw ConfigError("config: synthetic needs tasks and >=10 docs");
    }
}

namespace {

SyntheticSpec synthetic_from_json(const json& j) {
    SyntheticSpec s;
    for (auto& [key, value] : j.items()) {
        if (key == "n_tasks") s.n_tasks = value.get<size_t>();
        else if (key == "n_docs") s.n_docs = value.get<size_t>();
        else if (key == "share") s.share = value.get<double>();
        else if (key == "conflict") s.conflict = value.get<double>();
        else if (key == "n_neutral") s.n_neutral = value.get<size_t>();
        else if (key == "n_shared_cues") s.n_shared_cues = value.get<size_t>();
        else if (key == "n_task_cues") s.n_task_cues = value.get<size_t>();
        else if (key == "doc_len_min") s.doc_len_min = value.get<size_t>();
        else if (key == "doc_len_max") s.doc_len_max = value.get<size_t>();
        else if (key == "seed") s.seed = value.get<uint64_t>();
        else throw ConfigError("config: unknown synthetic key \"" + key + "\"");
    }
    return s;
}

json synthetic_to_json(const SyntheticSpec& s) {
    return json{{"n_tasks", s.n_tasks},
                {"n_docs", s.n_docs},
                {"share", s.share},
                {"conflict", s.conflict},
                {"n_neutral", s.n_neutral},
                {"n_shared_cues", s.n_shared_cues},
                {"n_task_cues", s.n_task_cues},
                {"doc_len_min", s.doc_len_min},
                {"doc_len_max", s.doc_len_max},
                {"seed", s.seed}};
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    RunConfig c;
    c.models.clear();
    for (auto& [key, value] : j.items()) {
        if (key == "out_dir") c.out_dir = value.get<std::string>();
        else if (key == "data") {
            if (!value.is_object())
                throw ConfigError("config: data must be an object");
            for (auto& [dk, dv] : value.items()) {
                if (dk == "prepared")
                    c.prepared_dir = dv.get<std::string>();
                else if (dk == "synthetic")
                    c.synthetic = synthetic_from_json(dv);
                else
                    throw ConfigError("config: unknown data key \"" + dk +
                                      "\"");
            }
        } else if (key == "embedding_path") {
            if (!value.is_null())
                c.embedding_path = value.get<std::string>();
        } else if (key == "models") {
            for (const auto& m : value)
                c.models.push_back(
                    model_kind_from_string(m.get<std::string>()));
        } else if (key == "n_sequences") {
            c.n_sequences = value.get<size_t>();
        } else if (key == "seed") {
            c.seed = value.get<uint64_t>();
        } else if (key == "hyperparams") {
            c.hp = hyperparams_from_json(value);
        } else {
            throw ConfigError("config: unknown key \"" + key + "\"");
        }
    }
    if (c.models.empty())
        c.models = {ModelKind::ONE, ModelKind::NCL, ModelKind::KAN};
    c.validate();
    return c;
}

json run_config_to_json(const RunConfig& c) {
    json data;
    if (c.prepared_dir) data["prepared"] = *c.prepared_dir;
    if (c.synthetic) data["synthetic"] = synthetic_to_json(*c.synthetic);
    json models = json::array();
    for (auto m : c.models) models.push_back(to_string(m));
    json j{{"out_dir", c.out_dir},
           {"data", data},
           {"models", models},
           {"n_sequences", c.n_sequences},
           {"seed", c.seed},
           {"hyperparams", hyperparams_to_json(c.hp)}};
    if (c.embedding_path) j["embedding_path"] = *c.embedding_path;
    return j;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded())
        throw ConfigError("malformed JSON in config file: " + path);
    return run_config_from_json(j);
}

}  // namespace kan
