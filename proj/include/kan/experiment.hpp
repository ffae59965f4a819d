#pragma once

#include <string>

#include "kan/config.hpp"
#include "kan/data.hpp"
#include "kan/eval.hpp"

namespace kan {

inline constexpr int kManifestSchemaVersion = 1;

// Tokenizes and splits a corpus directory (one line-delimited JSON file per
// task), builds the global vocabulary, and materializes everything under
// out_dir (vocab.json, tasks/<name>.json, manifest.json). Idempotent for a
// fixed seed.
void cmd_prepare(const std::string& corpus_dir, const std::string& out_dir,
                 uint64_t seed);

// Loads a prepared directory, padding documents to `step`.
Corpus load_prepared(const std::string& dir, size_t step);

// Executes the configured models over the configured sequences; writes
// sequence reports, checkpoints, the aggregate experiment report, and CSV
// summaries under config.out_dir. Interrupted runs resume from the last
// completed task checkpoint. Worker count comes from KAN_WORKERS (default 1).
ExperimentReport cmd_run(const RunConfig& config);

// Renders Table-1/2/3-style summaries from a finished run directory to the
// given stream.
void cmd_report(const std::string& run_dir, std::ostream& out);

}  // namespace kan
