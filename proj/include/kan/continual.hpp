#pragma once

#include <functional>
#include <iosfwd>
#include <optional>

#include "kan/model.hpp"
#include "kan/report.hpp"

namespace kan {

// State carried across tasks inside one sequence run; persisted after each
// task so interrupted runs resume from the last completed task.
struct RunProgress {
    size_t tasks_done = 0;
    std::vector<std::vector<double>> progressive;
    std::string rng_init_state, rng_ac_state, rng_mcl_state;
};

struct RunPersistence {
    // Called after every completed task.
    std::function<void(const KanModel&, const RunProgress&)> save;
    // Returns a previously saved state, if any.
    std::function<bool(KanModel&, RunProgress&)> load;
};

// Accessibility phase for task `t`: anneal s per batch, KB-RNN
// frozen, train AC-RNN + AC-EMB row t + the shared AC head, early stop on
// AC validation accuracy with the binarized mask).
TrainResult ac_train_task(int32_t t, const TaskDataset& data, KanModel& model,
                          const Hyperparams& hp, uint64_t seed,
                          Rng& dropout_rng, std::ostream* log = nullptr);

// Main phase for task `t`: fixed binary mask (ones for task 0 or when
// forced), train KB-RNN + head t, early stop on task-head accuracy.
TrainResult mcl_train_task(int32_t t, const TaskDataset& data,
                           KanModel& model, const Hyperparams& hp,
                           uint64_t seed, Rng& dropout_rng,
                           std::ostream* log = nullptr,
                           bool force_ones_mask = false);

struct ContinualResult {
    SequenceReport report;
    KanModel model;  // for ONE, the last task's model
};

// Trains the ordered tasks one by one and records the progressive accuracy
// matrix. KAN runs MCL before AC on the first task and AC before MCL on
// every later task; NCL skips AC and forces all-ones masks; ONE trains an
// isolated fresh network per task. `force_masks_ones` is the testing knob
// that turns KAN's MCL trajectory into NCL's.
ContinualResult continual_learn(ModelKind kind,
                                const std::vector<const TaskDataset*>& ordered,
                                const Tensor& embeddings,
                                const Hyperparams& hp, uint64_t seed,
                                bool force_masks_ones = false,
                                std::ostream* log = nullptr,
                                const RunPersistence* persist = nullptr);

}  // namespace kan
