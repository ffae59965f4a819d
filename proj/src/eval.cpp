#include "kan/eval.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "kan/errors.hpp"
#include "kan/stats.hpp"

namespace kan {

using nlohmann::json;

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::KAN: return "KAN";
        case ModelKind::NCL: return "N-CL";
        case ModelKind::ONE: return "ONE";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "KAN") return ModelKind::KAN;
    if (s == "N-CL" || s == "NCL") return ModelKind::NCL;
    if (s == "ONE") return ModelKind::ONE;
    throw ConfigError("unknown model kind \"" + s + "\"");
}

std::vector<std::vector<size_t>> gen_task_orders(size_t n_tasks,
                                                 size_t n_sequences,
                                                 uint64_t seed) {
    if (n_tasks == 0 || n_sequences == 0)
        throw ConfigError("gen_task_orders: need tasks and sequences");
    Rng rng(mix_seed(seed, 0x0BDE));
    std::vector<std::vector<size_t>> orders;
    std::set<size_t> used_last;
    for (size_t s = 0; s < n_sequences; ++s) {
        if (used_last.size() == n_tasks) used_last.clear();  // max-distinct
        std::vector<size_t> order(n_tasks);
        for (size_t i = 0; i < n_tasks; ++i) order[i] = i;
        do {
            rng.shuffle(order);
        } while (used_last.count(order.back()) > 0);
        used_last.insert(order.back());
        orders.push_back(std::move(order));
    }
    return orders;
}

SequenceReport run_model(ModelKind kind,
                         const std::vector<TaskDataset>& datasets,
                         const std::vector<size_t>& order,
                         const Tensor& embeddings, const Hyperparams& hp,
                         uint64_t seed, std::ostream* log,
                         const RunPersistence* persist) {
    std::vector<const TaskDataset*> ordered;
    ordered.reserve(order.size());
    for (size_t i : order) ordered.push_back(&datasets.at(i));
    return continual_learn(kind, ordered, embeddings, hp, seed, false, log,
                           persist)
        .report;
}

double all_tasks_average(const std::vector<SequenceReport>& reports) {
    if (reports.empty())
        throw ConfigError("all_tasks_average: no reports");
    double sum = 0.0;
    size_t count = 0;
    for (const auto& r : reports) {
        for (double a : r.final_acc) sum += a;
        count += r.final_acc.size();
    }
    if (count == 0) throw ConfigError("all_tasks_average: empty reports");
    return sum / static_cast<double>(count);
}

double last_task_average(const std::vector<SequenceReport>& reports) {
    if (reports.empty())
        throw ConfigError("last_task_average: no reports");
    double sum = 0.0;
    for (const auto& r : reports) {
        if (r.final_acc.empty())
            throw ConfigError("last_task_average: empty report");
        sum += r.final_acc.back();
    }
    return sum / static_cast<double>(reports.size());
}

std::vector<TransferRow> transfer_table(
    const std::vector<SequenceReport>& reports,
    const std::vector<size_t>& checkpoints) {
    if (reports.empty()) throw ConfigError("transfer_table: no reports");
    std::vector<TransferRow> table;
    for (size_t k : checkpoints) {
        TransferRow row;
        row.tasks = k;
        double fwd = 0.0, bwd = 0.0;
        for (const auto& r : reports) {
            if (k == 0 || k > r.progressive.size())
                throw ConfigError(
                    "transfer_table: checkpoint beyond task count");
            for (size_t i = 0; i < k; ++i) {
                fwd += r.first_learn[i];
                bwd += r.progressive[k - 1][i];
            }
        }
        const double denom = static_cast<double>(k * reports.size());
        row.forward = fwd / denom;
        row.backward = bwd / denom;
        table.push_back(row);
    }
    return table;
}

std::vector<double> paired_accuracies(const std::vector<SequenceReport>& r) {
    std::vector<double> out;
    for (const auto& rep : r)
        out.insert(out.end(), rep.final_acc.begin(), rep.final_acc.end());
    return out;
}

ExperimentReport aggregate_experiment(
    const std::vector<SequenceReport>& reports) {
    ExperimentReport exp;
    exp.sequences = reports;

    // group by model, preserving first-appearance order
    std::vector<std::string> models;
    std::map<std::string, std::vector<SequenceReport>> by_model;
    for (const auto& r : reports) {
        if (!by_model.count(r.model)) models.push_back(r.model);
        by_model[r.model].push_back(r);
    }
    exp.models = models;
    for (const auto& m : models) {
        exp.all_tasks_avg.push_back(all_tasks_average(by_model[m]));
        exp.last_task_avg.push_back(last_task_average(by_model[m]));
    }
    if (models.size() > 1) {
        const auto base = paired_accuracies(by_model[models[0]]);
        for (size_t i = 1; i < models.size(); ++i) {
            const auto other = paired_accuracies(by_model[models[i]]);
            if (other.size() == base.size() && base.size() >= 2)
                exp.p_values.push_back(
                    stats::paired_t_test(base, other).p);
            else
                exp.p_values.push_back(-1.0);  // not comparable
        }
    }
    return exp;
}

json sequence_report_to_json(const SequenceReport& r) {
    return json{{"schema_version", kReportSchemaVersion},
                {"model", r.model},
                {"seed", r.seed},
                {"task_order", r.task_order},
                {"first_learn", r.first_learn},
                {"final_acc", r.final_acc},
                {"progressive", r.progressive},
                {"t_test_pairing", "(sequence, task)"}};
}

SequenceReport sequence_report_from_json(const json& j) {
    if (j.value("schema_version", -1) != kReportSchemaVersion)
        throw DataError("sequence report schema version mismatch (found " +
                        std::to_string(j.value("schema_version", -1)) + ")");
    SequenceReport r;
    r.model = j.at("model").get<std::string>();
    r.seed = j.at("seed").get<uint64_t>();
    r.task_order = j.at("task_order").get<std::vector<std::string>>();
    r.first_learn = j.at("first_learn").get<std::vector<double>>();
    r.final_acc = j.at("final_acc").get<std::vector<double>>();
    r.progressive =
        j.at("progressive").get<std::vector<std::vector<double>>>();
    return r;
}

json experiment_report_to_json(const ExperimentReport& r) {
    json seqs = json::array();
    for (const auto& s : r.sequences) seqs.push_back(sequence_report_to_json(s));
    return json{{"schema_version", r.schema_version},
                {"sequences", seqs},
                {"models", r.models},
                {"all_tasks_avg", r.all_tasks_avg},
                {"last_task_avg", r.last_task_avg},
                {"p_values", r.p_values}};
}

ExperimentReport experiment_report_from_json(const json& j) {
    if (j.value("schema_version", -1) != kReportSchemaVersion)
        throw DataError("experiment report schema version mismatch");
    ExperimentReport r;
    for (const auto& s : j.at("sequences"))
        r.sequences.push_back(sequence_report_from_json(s));
    r.models = j.at("models").get<std::vector<std::string>>();
    r.all_tasks_avg = j.at("all_tasks_avg").get<std::vector<double>>();
    r.last_task_avg = j.at("last_task_avg").get<std::vector<double>>();
    r.p_values = j.at("p_values").get<std::vector<double>>();
    return r;
}

}  // namespace kan
