#include "kan/trainer.hpp"

#include <cmath>
#include <ostream>

#include "kan/data.hpp"
#include "kan/errors.hpp"

namespace kan {

void Hyperparams::validate() const {
    if (lr <= 0.0) throw ConfigError("hyperparams: lr must be positive");
    if (batch_size == 0) throw ConfigError("hyperparams: batch_size must be positive");
    if (patience == 0) throw ConfigError("hyperparams: patience must be positive");
    if (s_max <= 1.0) throw ConfigError("hyperparams: s_max must exceed 1");
    if (dropout_keep <= 0.0 || dropout_keep > 1.0)
        throw ConfigError("hyperparams: dropout_keep must be in (0, 1]");
    if (dims == 0) throw ConfigError("hyperparams: dims must be positive");
    if (max_epochs == 0) throw ConfigError("hyperparams: max_epochs must be positive");
    if (step == 0) throw ConfigError("hyperparams: step must be positive");
}

Adam::Adam(std::vector<NamedTensor> params, double lr, double beta1,
           double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2),
      eps_(eps) {
    for (const auto& p : params_) {
        m_.emplace_back(p.tensor.size(), 0.0);
        v_.emplace_back(p.tensor.size(), 0.0);
    }
}

void Adam::zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t pi = 0; pi < params_.size(); ++pi) {
        auto& p = params_[pi];
        const auto& g = p.tensor.grad();
        auto& data = p.tensor.data();
        auto& m = m_[pi];
        auto& v = v_[pi];
        for (size_t i = 0; i < data.size(); ++i) {
            if (!std::isfinite(g[i]))
                throw NumericError("adam: non-finite gradient in " + p.name);
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
            data[i] -= lr_ * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
        }
    }
}

TrainResult train_until_stop(
    size_t n_train, const Hyperparams& hp, uint64_t shuffle_seed,
    const std::function<ad::Tensor(const std::vector<size_t>&, size_t,
                                   size_t)>& batch_loss,
    const std::function<double()>& validate,
    std::vector<NamedTensor> trainables, std::ostream* log,
    const std::string& log_tag) {
    if (n_train == 0)
        throw DataError("train_until_stop: no training documents");

    Adam adam(std::move(trainables), hp.lr);
    TrainResult result;
    std::vector<std::vector<double>> best_snapshot;
    size_t stale_epochs = 0;

    for (size_t epoch = 1; epoch <= hp.max_epochs; ++epoch) {
        auto batches = make_batches(n_train, hp.batch_size, shuffle_seed,
                                    epoch);
        const size_t n_batches = batches.size();
        for (size_t b = 0; b < n_batches; ++b) {
            adam.zero_grad();
            ad::Tensor loss = batch_loss(batches[b], b + 1, n_batches);
            ad::backward(loss);
            adam.step();
        }
        const double acc = validate();
        result.val_history.push_back(acc);
        result.epochs_run = epoch;
        if (log)
            (*log) << log_tag << " epoch=" << epoch << " val_acc=" << acc
                   << '\n';

        if (acc > result.best_val_acc) {
            result.best_val_acc = acc;
            result.best_epoch = epoch;
            stale_epochs = 0;
            best_snapshot.clear();
            for (const auto& p : adam.params())
                best_snapshot.push_back(p.tensor.data());
        } else if (++stale_epochs >= hp.patience) {
            break;
        }
    }

    // restore the best-epoch weights
    for (size_t i = 0; i < best_snapshot.size(); ++i) {
        ad::Tensor t = adam.params()[i].tensor;  // handle shares the node
        t.data() = best_snapshot[i];
    }
    return result;
}

}  // namespace kan
