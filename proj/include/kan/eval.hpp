#pragma once

#include <json.hpp>

#include "kan/continual.hpp"
#include "kan/report.hpp"

namespace kan {

// Seeded task orders for an experiment. Last tasks are kept pairwise
// distinct across sequences where possible (max-distinct when there are
// more sequences than tasks).
std::vector<std::vector<size_t>> gen_task_orders(size_t n_tasks,
                                                 size_t n_sequences,
                                                 uint64_t seed);

// One (model kind, order, seed) run.
SequenceReport run_model(ModelKind kind,
                         const std::vector<TaskDataset>& datasets,
                         const std::vector<size_t>& order,
                         const Tensor& embeddings, const Hyperparams& hp,
                         uint64_t seed, std::ostream* log = nullptr,
                         const RunPersistence* persist = nullptr);

// Mean final accuracy across all tasks of all sequences.
double all_tasks_average(const std::vector<SequenceReport>& reports);

// Mean over sequences of the last-position task's final accuracy.
double last_task_average(const std::vector<SequenceReport>& reports);

// Forward/backward transfer at the requested checkpoints (task counts).
std::vector<TransferRow> transfer_table(
    const std::vector<SequenceReport>& reports,
    const std::vector<size_t>& checkpoints);

// Final accuracies flattened by (sequence, position); the t-test pairing
// unit.
std::vector<double> paired_accuracies(const std::vector<SequenceReport>& r);

// Aggregates a full experiment: per-model averages plus paired t-tests of
// the first model against each other one.
ExperimentReport aggregate_experiment(
    const std::vector<SequenceReport>& reports);

nlohmann::json sequence_report_to_json(const SequenceReport& r);
SequenceReport sequence_report_from_json(const nlohmann::json& j);
nlohmann::json experiment_report_to_json(const ExperimentReport& r);
ExperimentReport experiment_report_from_json(const nlohmann::json& j);

}  // namespace kan
