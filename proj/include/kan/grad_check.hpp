#pragma once

#include <functional>
#include <string>
#include <vector>

#include "kan/tensor.hpp"

namespace kan::ad {

struct GradCheckEntry {
    std::string name;
    double max_rel_dev = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double max_rel_dev = 0.0;
    bool passed(double tolerance) const { return max_rel_dev < tolerance; }
};

// Compares analytic gradients of a scalar-valued graph builder against
// central finite differences (step `eps`). `fn` must be deterministic:
// callers reseed any RNG it consumes before every invocation. Deviation is
// |analytic - numeric| / max(1, |analytic|, |numeric|). Non-finite values
// raise NumericError naming the parameter.
GradCheckReport grad_check(
    const std::function<Tensor()>& fn,
    const std::vector<std::pair<std::string, Tensor>>& params,
    double eps = 1e-6);

}  // namespace kan::ad
