#pragma once

// Independent reference implementations used to check the library: brute
// force enumeration, closed forms and lattice search. Nothing here shares
// code with the implementation paths under test.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "rankfolio/core_model.hpp"

namespace oracle {

using rankfolio::core_model::TotalOrder;

/// All permutations of n assets, lexicographic in the best-first sequence.
inline std::vector<TotalOrder> all_orders(int n) {
    std::vector<int> assets(static_cast<std::size_t>(n));
    std::iota(assets.begin(), assets.end(), 0);
    std::vector<TotalOrder> out;
    do {
        out.push_back(TotalOrder::from_assets_by_rank(assets));
    } while (std::next_permutation(assets.begin(), assets.end()));
    return out;
}

/// Discordant pair count computed directly from positions.
inline std::int64_t discordant_pairs(const TotalOrder& a, const TotalOrder& b) {
    std::int64_t cnt = 0;
    const int n = a.n();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i >= j) continue;
            const int s1 = a.rank(i) - a.rank(j);
            const int s2 = b.rank(i) - b.rank(j);
            if ((s1 < 0 && s2 > 0) || (s1 > 0 && s2 < 0)) ++cnt;
        }
    return cnt;
}

inline std::int64_t footrule(const TotalOrder& a, const TotalOrder& b) {
    std::int64_t s = 0;
    for (int i = 0; i < a.n(); ++i)
        s += std::llabs(static_cast<std::int64_t>(a.rank(i)) - static_cast<std::int64_t>(b.rank(i)));
    return s;
}

inline std::int64_t kemeny_raw_cost(const TotalOrder& sigma, const std::vector<TotalOrder>& profile) {
    std::int64_t s = 0;
    for (const auto& o : profile) s += discordant_pairs(sigma, o);
    return s;
}

/// Exhaustive Kemeny optimum; ties resolved toward the lexicographically
/// smallest rank sequence.
inline std::pair<TotalOrder, std::int64_t> brute_force_kemeny(const std::vector<TotalOrder>& profile) {
    const int n = profile.front().n();
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    TotalOrder best_order = TotalOrder::identity(n);
    for (const auto& cand : all_orders(n)) {
        const std::int64_t cost = kemeny_raw_cost(cand, profile);
        if (cost < best || (cost == best && cand.ranks() < best_order.ranks())) {
            best = cost;
            best_order = cand;
        }
    }
    return {best_order, best};
}

/// Exhaustive footrule optimum (cost only; optima can tie).
inline std::pair<TotalOrder, std::int64_t> brute_force_footrule(const std::vector<TotalOrder>& profile) {
    const int n = profile.front().n();
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    TotalOrder best_order = TotalOrder::identity(n);
    for (const auto& cand : all_orders(n)) {
        std::int64_t cost = 0;
        for (const auto& o : profile) cost += footrule(cand, o);
        if (cost < best) {
            best = cost;
            best_order = cand;
        }
    }
    return {best_order, best};
}

/// Mean of a univariate normal truncated to [0, inf).
inline double truncated_mean_lower0(double mean, double sd) {
    const double a = -mean / sd;
    const double phi = std::exp(-0.5 * a * a) / std::sqrt(2.0 * M_PI);
    const double tail = 0.5 * std::erfc(a / std::sqrt(2.0));
    return mean + sd * phi / tail;
}

/**
 * Progressive lattice search for max f over the probability simplex
 * (n = 2 or 3).
 *
 * The full simplex is scanned on a 1e-2 lattice, then the lattice step is
 * refined tenfold per level down to final_step, each level rescanning
 * windows around the incumbent and around any supplied candidate points.
 * Nonsmooth optima (kinks of min/max compositions) leave a first-order
 * error of about slope * step on a fixed lattice, so refinement below the
 * comparison tolerance is what makes 1e-6 agreement checks meaningful.
 * Valid for concave f; nonconcave objectives must be decomposed into
 * concave pieces first.
 */
inline double simplex_lattice_max(const std::function<double(const Eigen::VectorXd&)>& f, int n,
                                  const std::vector<Eigen::VectorXd>& candidates = {},
                                  double final_step = 1e-9) {
    if (n != 2 && n != 3) throw std::invalid_argument("simplex_lattice_max: only n = 2 or 3");
    double best = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_w = Eigen::VectorXd::Constant(n, 1.0 / n);
    const auto consider = [&](const Eigen::VectorXd& w) {
        const double v = f(w);
        if (v > best) {
            best = v;
            best_w = w;
        }
    };

    double step = 1e-2;
    {
        const long s = std::lround(1.0 / step);
        for (long i = 0; i <= s; ++i) {
            if (n == 2) {
                Eigen::VectorXd w(2);
                w << static_cast<double>(i) * step, 1.0 - static_cast<double>(i) * step;
                consider(w);
            } else {
                for (long j = 0; j <= s - i; ++j) {
                    Eigen::VectorXd w(3);
                    w << static_cast<double>(i) * step, static_cast<double>(j) * step,
                        1.0 - (static_cast<double>(i) + static_cast<double>(j)) * step;
                    consider(w);
                }
            }
        }
    }

    while (step > final_step) {
        const double fine = step / 10.0;
        const long fsteps = std::lround(1.0 / fine);
        const long halo = 25;
        std::vector<Eigen::VectorXd> centers = candidates;
        centers.push_back(best_w);
        for (const auto& center : centers) {
            const long ci = std::min(fsteps, std::max<long>(0, std::lround(center[0] / fine)));
            if (n == 2) {
                for (long i = std::max<long>(0, ci - halo); i <= std::min(fsteps, ci + halo); ++i) {
                    Eigen::VectorXd w(2);
                    w << static_cast<double>(i) * fine, 1.0 - static_cast<double>(i) * fine;
                    consider(w);
                }
            } else {
                const long cj = std::min(fsteps, std::max<long>(0, std::lround(center[1] / fine)));
                for (long i = std::max<long>(0, ci - halo); i <= std::min(fsteps, ci + halo); ++i)
                    for (long j = std::max<long>(0, cj - halo); j <= std::min(fsteps - i, cj + halo);
                         ++j) {
                        Eigen::VectorXd w(3);
                        w << static_cast<double>(i) * fine, static_cast<double>(j) * fine,
                            1.0 - (static_cast<double>(i) + static_cast<double>(j)) * fine;
                        consider(w);
                    }
            }
        }
        step = fine;
    }
    return best;
}

/// All size-m index subsets of {0..k-1}, lexicographic.
inline std::vector<std::vector<int>> subsets_of_size(int k, int m) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    const std::function<void(int)> rec = [&](int start) {
        if (static_cast<int>(cur.size()) == m) {
            out.push_back(cur);
            return;
        }
        for (int i = start; i <= k - (m - static_cast<int>(cur.size())); ++i) {
            cur.push_back(i);
            rec(i + 1);
            cur.pop_back();
        }
    };
    rec(0);
    return out;
}

/// Risk-adjusted return used by the solver oracles.
inline double mvo_objective(const Eigen::VectorXd& w, const Eigen::VectorXd& mu,
                            const Eigen::MatrixXd& sigma, double delta) {
    return mu.dot(w) - 0.5 * delta * w.dot(sigma * w);
}

/// Chi-square 99th percentile for small degrees of freedom.
inline double chi2_99(int df) {
    switch (df) {
        case 1: return 6.6348966010;
        case 2: return 9.2103403720;
        case 3: return 11.3448667300;
        case 4: return 13.2767041359;
        case 5: return 15.0862724694;
        default: throw std::invalid_argument("chi2_99: df not tabulated");
    }
}

}  // namespace oracle
