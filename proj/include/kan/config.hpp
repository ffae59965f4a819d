#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kan/data.hpp"
#include "kan/report.hpp"
#include "kan/trainer.hpp"

namespace kan {

// Declarative experiment description, serialized verbatim into the run
// directory. Exactly one of prepared_dir / synthetic must be set.
struct RunConfig {
    std::string out_dir;
    std::optional<std::string> prepared_dir;  // output of `prepare`
    std::optional<SyntheticSpec> synthetic;
    std::optional<std::string> embedding_path;  // random init when absent
    std::vector<ModelKind> models{ModelKind::ONE, ModelKind::NCL,
                                  ModelKind::KAN};
    size_t n_sequences = 5;
    uint64_t seed = 0;
    Hyperparams hp;

    void validate() const;  // throws ConfigError
};

RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& c);
RunConfig load_run_config(const std::string& path);

}  // namespace kan
