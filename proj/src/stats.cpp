#include "sentitrade/stats.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "sentitrade/error.hpp"

namespace sentitrade::stats {

double mean(const std::vector<double>& v) {
    if (v.empty()) fail(ErrorKind::InsufficientData, "mean of an empty sample");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double two_tailed_p(double t, double df) {
    if (std::isnan(t)) fail(ErrorKind::Numerical, "t statistic is NaN");
    if (std::isinf(t)) return 0.0;
    boost::math::students_t dist(df);
    return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

TTest one_sample_t(const std::vector<double>& sample) {
    if (sample.size() < 2) fail(ErrorKind::InsufficientData, "t-test needs at least two values");
    TTest r;
    r.n = sample.size();
    r.mean = mean(sample);
    r.sd = sample_sd(sample);
    if (r.sd > 0) {
        r.t = r.mean / (r.sd / std::sqrt(static_cast<double>(r.n)));
        r.p = two_tailed_p(r.t, static_cast<double>(r.n - 1));
    } else if (r.mean != 0) {
        r.t = std::copysign(std::numeric_limits<double>::infinity(), r.mean);
        r.p = 0.0;
    } else {
        r.t = 0.0;
        r.p = 1.0;
    }
    return r;
}

}  // namespace sentitrade::stats
