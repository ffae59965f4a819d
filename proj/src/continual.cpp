#include "kan/continual.hpp"

#include <ostream>

#include "kan/errors.hpp"
#include "kan/ops.hpp"

namespace kan {

using namespace ad;

namespace {

// Seed tags for the independent streams; AC and MCL draws are kept apart so
// an NCL run (which has no AC phase) consumes exactly the same MCL stream
// as a KAN run under a shared seed.
constexpr uint64_t kInitStream = 0x11;
constexpr uint64_t kAcStream = 0x22;
constexpr uint64_t kMclStream = 0x33;
constexpr uint64_t kAcShuffle = 0x44;
constexpr uint64_t kMclShuffle = 0x55;

// KB-RNN gradients are skipped entirely while it is frozen.
struct FreezeKb {
    KanModel& model;
    explicit FreezeKb(KanModel& m) : model(m) {
        model.kb.set_requires_grad(false);
    }
    ~FreezeKb() { model.kb.set_requires_grad(true); }
};

}  // namespace

TrainResult ac_train_task(int32_t t, const TaskDataset& data, KanModel& model,
                          const Hyperparams& hp, uint64_t seed,
                          Rng& dropout_rng, std::ostream* log) {
    if (model.kb.hidden_dim == 0)
        throw ConfigError("ac_train_task: KB-RNN parameters missing");
    FreezeKb freeze(model);

    auto batch_loss = [&](const std::vector<size_t>& idx, size_t b,
                          size_t n_batches) {
        const double s = anneal_s(b, n_batches, hp.s_max);
        Batch batch = gather_batch(data.train, idx);
        return ac_forward(model, t, batch, s, Mode::Train, dropout_rng).loss;
    };
    auto validate = [&] {
        return ac_accuracy(model, t, data.valid, hp.batch_size);
    };
    if (log)
        (*log) << "task=" << t << " phase=AC s_endpoints=["
               << anneal_s(1, 2, hp.s_max) << "," << hp.s_max << "]\n";
    return train_until_stop(data.train.size(), hp, mix_seed(seed, kAcShuffle),
                            batch_loss, validate, model.ac_trainables(), log,
                            "task=" + std::to_string(t) + " phase=AC");
}

TrainResult mcl_train_task(int32_t t, const TaskDataset& data,
                           KanModel& model, const Hyperparams& hp,
                           uint64_t seed, Rng& dropout_rng, std::ostream* log,
                           bool force_ones_mask) {
    if (t < 0 || static_cast<size_t>(t) >= model.n_tasks)
        throw std::out_of_range("mcl_train_task: unknown task id " +
                                std::to_string(t));
    // Fixed binary mask for the whole phase (s pinned at s_max; ones for the
    // first task).
    const std::vector<double> mask =
        force_ones_mask || t == 0 ? std::vector<double>(model.dims, 1.0)
                                  : binary_mask_from_emb(model, t);

    auto batch_loss = [&](const std::vector<size_t>& idx, size_t, size_t) {
        Batch batch = gather_batch(data.train, idx);
        return mcl_forward(model, t, batch, mask, Mode::Train, dropout_rng)
            .loss;
    };
    model.task_trained[t] = true;  // head exists from here on
    auto validate = [&] {
        return mcl_accuracy(model, t, data.valid, hp.batch_size,
                            force_ones_mask);
    };
    return train_until_stop(data.train.size(), hp,
                            mix_seed(seed, kMclShuffle), batch_loss, validate,
                            model.mcl_trainables(t), log,
                            "task=" + std::to_string(t) + " phase=MCL");
}

ContinualResult continual_learn(ModelKind kind,
                                const std::vector<const TaskDataset*>& ordered,
                                const Tensor& embeddings,
                                const Hyperparams& hp, uint64_t seed,
                                bool force_masks_ones, std::ostream* log,
                                const RunPersistence* persist) {
    if (ordered.empty())
        throw ConfigError("continual_learn: need at least one task");
    hp.validate();
    const size_t n = ordered.size();
    const bool force_ones = force_masks_ones || kind == ModelKind::NCL ||
                            kind == ModelKind::ONE;

    Rng rng_init(mix_seed(seed, kInitStream));
    Rng rng_ac(mix_seed(seed, kAcStream));
    Rng rng_mcl(mix_seed(seed, kMclStream));

    KanModel model;
    RunProgress prog;
    bool resumed = false;
    if (persist && persist->load && persist->load(model, prog)) {
        resumed = true;
        rng_init.restore(prog.rng_init_state);
        rng_ac.restore(prog.rng_ac_state);
        rng_mcl.restore(prog.rng_mcl_state);
        if (log) (*log) << "resumed after " << prog.tasks_done << " tasks\n";
    }
    if (!resumed && kind != ModelKind::ONE)
        model = KanModel::init(n, embeddings, hp, rng_init);

    for (size_t pos = prog.tasks_done; pos < n; ++pos) {
        const auto& data = *ordered[pos];
        const uint64_t task_seed = mix_seed(seed, 0x7000 + pos);
        if (kind == ModelKind::ONE) {
            // isolated fresh network per task, trained at position 0
            model = KanModel::init(1, embeddings, hp, rng_init);
            mcl_train_task(0, data, model, hp, task_seed, rng_mcl, log, true);
        } else if (kind == ModelKind::NCL) {
            mcl_train_task(static_cast<int32_t>(pos), data, model, hp,
                           task_seed, rng_mcl, log, true);
        } else if (pos == 0) {
            // first task: MCL (to give the KB some knowledge) before AC
            mcl_train_task(0, data, model, hp, task_seed, rng_mcl, log,
                           force_masks_ones);
            ac_train_task(0, data, model, hp, task_seed, rng_ac, log);
        } else {
            ac_train_task(static_cast<int32_t>(pos), data, model, hp,
                          task_seed, rng_ac, log);
            mcl_train_task(static_cast<int32_t>(pos), data, model, hp,
                           task_seed, rng_mcl, log, force_masks_ones);
        }

        // progressive row: test accuracy of every task seen so far
        std::vector<double> row;
        row.reserve(pos + 1);
        for (size_t q = 0; q <= pos; ++q) {
            if (kind == ModelKind::ONE)
                row.push_back(q == pos ? mcl_accuracy(model, 0,
                                                      ordered[q]->test,
                                                      hp.batch_size, true)
                                       : prog.progressive[q][q]);
            else
                row.push_back(mcl_accuracy(model, static_cast<int32_t>(q),
                                           ordered[q]->test, hp.batch_size,
                                           force_ones));
        }
        prog.progressive.push_back(std::move(row));
        prog.tasks_done = pos + 1;
        if (log)
            (*log) << "task=" << pos
                   << " done first_learn=" << prog.progressive[pos][pos]
                   << '\n';
        if (persist && persist->save) {
            prog.rng_init_state = rng_init.state();
            prog.rng_ac_state = rng_ac.state();
            prog.rng_mcl_state = rng_mcl.state();
            persist->save(model, prog);
        }
    }

    ContinualResult result;
    result.model = std::move(model);
    auto& rep = result.report;
    rep.model = to_string(kind);
    rep.seed = seed;
    for (const auto* d : ordered) rep.task_order.push_back(d->name);
    rep.progressive = std::move(prog.progressive);
    for (size_t i = 0; i < n; ++i)
        rep.first_learn.push_back(rep.progressive[i][i]);
    rep.final_acc = rep.progressive.back();
    return result;
}

}  // namespace kan
