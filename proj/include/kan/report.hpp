#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace kan {

inline constexpr int kReportSchemaVersion = 1;

enum class ModelKind { KAN, NCL, ONE };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);  // throws ConfigError

// Accuracies gathered over one task sequence. All lists are indexed by
// sequence position. progressive[k] holds the test accuracies of positions
// 0..k measured right after position k finished training, so
// progressive[k][k] is the first-learn accuracy and the last row the final
// accuracies.
struct SequenceReport {
    std::string model;
    uint64_t seed = 0;
    std::vector<std::string> task_order;
    std::vector<double> first_learn;
    std::vector<double> final_acc;
    std::vector<std::vector<double>> progressive;
};

struct TransferRow {
    size_t tasks = 0;     // checkpoint k
    double forward = 0.0;  // mean first-learn accuracy of the first k tasks
    double backward = 0.0; // mean accuracy of those tasks after k completed
};

struct ExperimentReport {
    int schema_version = kReportSchemaVersion;
    std::vector<SequenceReport> sequences;  // all models, all orders
    // aggregate per model
    std::vector<std::string> models;
    std::vector<double> all_tasks_avg;
    std::vector<double> last_task_avg;
    // two-sided paired t-test p-values of models[0] against each other model
    std::vector<double> p_values;  // p_values[0] corresponds to models[1]...
};

}  // namespace kan
