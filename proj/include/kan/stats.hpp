#pragma once

#include <cstddef>
#include <vector>

namespace kan::stats {

// Regularized incomplete beta function I_x(a, b), continued-fraction
// (modified Lentz) evaluation.
double regularized_incomplete_beta(double a, double b, double x);

// CDF of Student's t distribution with df degrees of freedom.
double student_t_cdf(double t, double df);

struct TTestResult {
    double t = 0.0;
    double p = 1.0;  // two-sided
    size_t n = 0;
};

// Paired two-sided t-test on equal-length samples (n >= 2). Conventions for
// zero-variance differences: zero mean -> p = 1, nonzero mean -> p = 0.
TTestResult paired_t_test(const std::vector<double>& a,
                          const std::vector<double>& b);

}  // namespace kan::stats
