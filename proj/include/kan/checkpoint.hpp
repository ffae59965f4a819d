#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "kan/model.hpp"

namespace kan {

inline constexpr int kCheckpointSchemaVersion = 1;

// Self-describing single-file archive: every parameter tensor keyed by its
// canonical name, plus the vocabulary hash and hyperparameters. Tensor data
// is hex-encoded IEEE-754 bits, so the round trip is bit-exact.
void save_checkpoint(const std::string& path, const KanModel& model,
                     uint64_t vocab_hash, const Hyperparams& hp,
                     const nlohmann::json* extra = nullptr);

struct LoadedCheckpoint {
    KanModel model;
    uint64_t vocab_hash = 0;
    Hyperparams hp;
    nlohmann::json extra;  // null when absent
};

LoadedCheckpoint load_checkpoint(const std::string& path);

// Hyperparams <-> JSON (shared with the run config).
nlohmann::json hyperparams_to_json(const Hyperparams& hp);
Hyperparams hyperparams_from_json(const nlohmann::json& j);

}  // namespace kan
