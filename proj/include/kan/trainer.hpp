#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "kan/rnn.hpp"

namespace kan {

struct Hyperparams {
    double lr = 0.001;
    size_t batch_size = 64;
    size_t patience = 5;
    double s_max = 140.0;
    double dropout_keep = 0.5;
    size_t dims = 300;       // embedding and hidden size, shared
    size_t max_epochs = 100;
    size_t step = 256;       // max sequence length

    void validate() const;  // throws ConfigError
};

// Bias-corrected Adam over an explicit trainable subset. Parameters outside
// the subset are never touched.
class Adam {
   public:
    explicit Adam(std::vector<NamedTensor> params, double lr,
                  double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8);

    void zero_grad();
    // One update from the gradients currently on the parameters. Throws
    // NumericError naming the parameter on a non-finite gradient.
    void step();

    size_t timestep() const { return t_; }
    const std::vector<NamedTensor>& params() const { return params_; }

   private:
    std::vector<NamedTensor> params_;
    std::vector<std::vector<double>> m_, v_;
    double lr_, beta1_, beta2_, eps_;
    size_t t_ = 0;
};

struct TrainResult {
    size_t epochs_run = 0;
    size_t best_epoch = 0;  // 1-based
    double best_val_acc = -1.0;
    std::vector<double> val_history;
};

// Epoch/batch loop with early stopping: stops after `patience` consecutive
// epochs without strict validation improvement (or at max_epochs) and
// restores the best-epoch weights of the trainable subset.
//
// batch_loss(indices, b, n_batches) builds the loss graph for one batch;
// b is 1-based so schedules like the s annealing can use it directly.
// validate() is called once per epoch after the updates.
TrainResult train_until_stop(
    size_t n_train, const Hyperparams& hp, uint64_t shuffle_seed,
    const std::function<ad::Tensor(const std::vector<size_t>&, size_t,
                                   size_t)>& batch_loss,
    const std::function<double()>& validate,
    std::vector<NamedTensor> trainables, std::ostream* log = nullptr,
    const std::string& log_tag = std::string());

}  // namespace kan
