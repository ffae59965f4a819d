#include "kan/grad_check.hpp"

#include <cmath>

#include "kan/errors.hpp"

namespace kan::ad {

GradCheckReport grad_check(
    const std::function<Tensor()>& fn,
    const std::vector<std::pair<std::string, Tensor>>& params, double eps) {
    GradCheckReport report;

    for (auto& [name, p] : params) p.node()->grad.assign(p.size(), 0.0);
    Tensor loss = fn();
    backward(loss);

    // Freeze the analytic gradients before perturbing anything.
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (auto& [name, p] : params) analytic.push_back(p.grad());

    for (size_t pi = 0; pi < params.size(); ++pi) {
        const auto& name = params[pi].first;
        Tensor p = params[pi].second;
        GradCheckEntry entry{name, 0.0};
        for (size_t i = 0; i < p.size(); ++i) {
            const double saved = p.data()[i];
            p.data()[i] = saved + eps;
            const double up = fn().item();
            p.data()[i] = saved - eps;
            const double down = fn().item();
            p.data()[i] = saved;
            const double numeric = (up - down) / (2.0 * eps);
            const double a = analytic[pi][i];
            if (!std::isfinite(numeric) || !std::isfinite(a))
                throw NumericError("grad_check: non-finite gradient for " +
                                   name);
            const double dev = std::abs(a - numeric) /
                               std::max({1.0, std::abs(a), std::abs(numeric)});
            entry.max_rel_dev = std::max(entry.max_rel_dev, dev);
        }
        report.max_rel_dev = std::max(report.max_rel_dev, entry.max_rel_dev);
        report.entries.push_back(std::move(entry));
    }
    return report;
}

}  // namespace kan::ad
