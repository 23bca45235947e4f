#pragma once

#include <cstddef>
#include <vector>

namespace sentitrade::stats {

double mean(const std::vector<double>& v);
/// n - 1 denominator; 0 for fewer than two values.
double sample_sd(const std::vector<double>& v);

struct TTest {
    std::size_t n = 0;
    double mean = 0;
    double sd = 0;
    double t = 0;
    double p = 1;
};

/// One-sample two-tailed t-test of mean zero, df = n - 1. With sd = 0 the
/// statistic is +-inf and p = 0 for a nonzero mean, or t = 0 and p = 1.
TTest one_sample_t(const std::vector<double>& sample);

/// Two-tailed p for a t statistic.
double two_tailed_p(double t, double df);

}  // namespace sentitrade::stats
