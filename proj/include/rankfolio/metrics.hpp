#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace rankfolio::metrics {

namespace detail {

inline double mean(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

/// Sample variance with denominator T-1.
inline double sample_variance(const std::vector<double>& xs) {
    const double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return s / static_cast<double>(xs.size() - 1);
}

}  // namespace detail

/**
 * Sharpe ratio: mean excess return over the sample standard deviation of
 * returns (denominator T-1). With annualize set, the monthly ratio is
 * scaled by sqrt(12).
 */
inline double sharpe_ratio(const std::vector<double>& returns, const std::vector<double>& rf,
                           bool annualize = true) {
    if (returns.size() < 2) throw std::invalid_argument("sharpe_ratio: need at least 2 returns");
    if (rf.size() != returns.size())
        throw std::invalid_argument("sharpe_ratio: risk-free series length mismatch");
    double excess = 0.0;
    for (std::size_t t = 0; t < returns.size(); ++t) excess += returns[t] - rf[t];
    excess /= static_cast<double>(returns.size());
    const double sd = std::sqrt(detail::sample_variance(returns));
    if (!(sd > 0.0)) throw std::runtime_error("sharpe_ratio: zero return variance, SR undefined");
    const double sr = excess / sd;
    return annualize ? sr * std::sqrt(12.0) : sr;
}

inline double sharpe_ratio(const std::vector<double>& returns, double rf, bool annualize = true) {
    return sharpe_ratio(returns, std::vector<double>(returns.size(), rf), annualize);
}

/// Certainty-equivalent return: mean - (delta/2) * sample variance.
inline double ceq(const std::vector<double>& returns, double delta) {
    if (returns.size() < 2) throw std::invalid_argument("ceq: need at least 2 returns");
    return detail::mean(returns) - 0.5 * delta * detail::sample_variance(returns);
}

/**
 * Methods within rel_tol (default 1%) of the best value. For a positive
 * maximum the band is (1 - rel_tol) * max; for max <= 0 a symmetric
 * |max|-scaled band max - rel_tol * |max| is used, so ties at zero and
 * negative-valued races stay well defined.
 */
inline std::set<std::string> count_wins(const std::map<std::string, double>& values,
                                        double rel_tol = 0.01) {
    if (values.empty()) throw std::invalid_argument("count_wins: empty value map");
    double max_value = -std::numeric_limits<double>::infinity();
    for (const auto& [name, v] : values) {
        if (!std::isfinite(v)) throw std::invalid_argument("count_wins: non-finite value for " + name);
        max_value = std::max(max_value, v);
    }
    const double threshold = max_value > 0.0 ? (1.0 - rel_tol) * max_value
                                             : max_value - rel_tol * std::fabs(max_value);
    std::set<std::string> winners;
    for (const auto& [name, v] : values)
        if (v >= threshold) winners.insert(name);
    return winners;
}

/// One method's outcome in one parameter setting of the horse race.
struct PerformanceRecord {
    std::string method;
    int k = 0;
    double d = 0.0;
    double c = 0.0;
    double sr = 0.0;
    double ceq = 0.0;
    std::vector<double> monthly_returns;
};

}  // namespace rankfolio::metrics
