#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rankfolio/core_model.hpp"
#include "rankfolio/detail/assignment.hpp"
#include "rankfolio/ordinal.hpp"

namespace rankfolio::aggregation {

using core_model::TotalOrder;

/// A profile of K total orders over the same asset universe.
class OrderProfile {
public:
    explicit OrderProfile(std::vector<TotalOrder> orders) : orders_(std::move(orders)) {
        if (orders_.empty()) throw std::invalid_argument("OrderProfile: need K >= 1 orders");
        for (const auto& o : orders_)
            if (o.n() != orders_.front().n())
                throw std::invalid_argument("OrderProfile: orders have mixed n");
    }

    int k() const { return static_cast<int>(orders_.size()); }
    int n() const { return orders_.front().n(); }
    const TotalOrder& order(int idx) const { return orders_[static_cast<std::size_t>(idx)]; }
    const std::vector<TotalOrder>& orders() const { return orders_; }

private:
    std::vector<TotalOrder> orders_;
};

/**
 * Pairwise majority relation of a profile: i dominates j iff at least K/2
 * of the orders rank i before j. For even K an exact split makes i and j
 * dominate each other; the relation is kept literal and consumers decide
 * how to resolve such ties.
 */
class MajorityRelation {
public:
    explicit MajorityRelation(const OrderProfile& profile)
        : n_(profile.n()), k_(profile.k()), prefer_(static_cast<std::size_t>(n_) * n_, 0) {
        for (const auto& o : profile.orders())
            for (int i = 0; i < n_; ++i)
                for (int j = 0; j < n_; ++j)
                    if (i != j && o.rank(i) < o.rank(j)) ++prefer_[idx(i, j)];
    }

    int n() const { return n_; }
    int k() const { return k_; }

    /// Number of orders ranking i before j.
    int prefer_count(int i, int j) const { return prefer_[idx(i, j)]; }

    bool dominates(int i, int j) const {
        if (i == j) return false;
        return 2 * prefer_[idx(i, j)] >= k_;
    }

    bool strictly_dominates(int i, int j) const {
        if (i == j) return false;
        return 2 * prefer_[idx(i, j)] > k_;
    }

private:
    std::size_t idx(int i, int j) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(j);
    }

    int n_;
    int k_;
    std::vector<int> prefer_;
};

/// Sum of raw pairwise disagreements of sigma against every profile order.
inline std::int64_t kt_raw_score(const TotalOrder& sigma, const OrderProfile& profile) {
    std::int64_t total = 0;
    for (const auto& o : profile.orders()) total += ordinal::kendall_tau_raw(sigma, o);
    return total;
}

/// Kendall-tau score: sum over the profile of normalized distances.
inline double kt_score(const TotalOrder& sigma, const OrderProfile& profile) {
    if (sigma.n() != profile.n()) throw std::invalid_argument("kt_score: dimension mismatch");
    if (sigma.n() < 2) throw std::invalid_argument("kt_score: need n >= 2");
    const double pairs = 0.5 * static_cast<double>(sigma.n()) * static_cast<double>(sigma.n() - 1);
    return static_cast<double>(kt_raw_score(sigma, profile)) / pairs;
}

namespace detail {

/// Assets sorted by decreasing score; equal scores resolved by ascending
/// asset index (the global tie-break convention).
template <typename Score>
TotalOrder order_by_scores(const std::vector<Score>& scores) {
    std::vector<int> assets(scores.size());
    std::iota(assets.begin(), assets.end(), 0);
    std::sort(assets.begin(), assets.end(), [&](int a, int b) {
        const Score& sa = scores[static_cast<std::size_t>(a)];
        const Score& sb = scores[static_cast<std::size_t>(b)];
        if (sa != sb) return sa > sb;
        return a < b;
    });
    return TotalOrder::from_assets_by_rank(assets);
}

}  // namespace detail

/// Borda rule: asset i scores sum_k (n - rank_k(i)); sort by decreasing score.
inline TotalOrder borda(const OrderProfile& profile) {
    const int n = profile.n();
    std::vector<std::int64_t> scores(static_cast<std::size_t>(n), 0);
    for (const auto& o : profile.orders())
        for (int i = 0; i < n; ++i) scores[static_cast<std::size_t>(i)] += n - o.rank(i);
    return detail::order_by_scores(scores);
}

/**
 * Footrule aggregation: the permutation minimizing the total Spearman
 * footrule distance to the profile, found exactly by solving the n x n
 * linear assignment problem with cost
 *   C(i, p) = sum_k | p - rank_k(i) |.
 * Ties among optimal assignments are fixed by the solver's deterministic
 * scan order.
 */
inline TotalOrder footrule_aggregate(const OrderProfile& profile) {
    const int n = profile.n();
    std::vector<std::vector<std::int64_t>> cost(static_cast<std::size_t>(n),
                                                std::vector<std::int64_t>(static_cast<std::size_t>(n), 0));
    for (int i = 0; i < n; ++i)
        for (int p = 1; p <= n; ++p) {
            std::int64_t c = 0;
            for (const auto& o : profile.orders()) c += std::llabs(static_cast<std::int64_t>(p) - o.rank(i));
            cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(p - 1)] = c;
        }
    const std::vector<int> row_of = rankfolio::detail::solve_assignment(cost);
    std::vector<int> ranks(static_cast<std::size_t>(n), 0);
    for (int p = 0; p < n; ++p) ranks[static_cast<std::size_t>(row_of[static_cast<std::size_t>(p)])] = p + 1;
    return TotalOrder::from_ranks(std::move(ranks));
}

/// Copeland method: score = |dominated by i| - |dominating i| under the
/// literal majority relation; sort by decreasing score, ties by index.
inline TotalOrder copeland(const OrderProfile& profile) {
    const MajorityRelation maj(profile);
    const int n = profile.n();
    std::vector<int> scores(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
        int s = 0;
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            if (maj.dominates(i, j)) ++s;
            if (maj.dominates(j, i)) --s;
        }
        scores[static_cast<std::size_t>(i)] = s;
    }
    return detail::order_by_scores(scores);
}

/// Best-of-k: the profile member with the smallest Kendall-tau score;
/// ties resolved by the lowest profile index. 2-approximates the optimum.
inline TotalOrder best_of_k(const OrderProfile& profile) {
    int best = 0;
    std::int64_t best_score = kt_raw_score(profile.order(0), profile);
    for (int k = 1; k < profile.k(); ++k) {
        const std::int64_t s = kt_raw_score(profile.order(k), profile);
        if (s < best_score) {
            best_score = s;
            best = k;
        }
    }
    return profile.order(best);
}

/// Thrown when the MC4 power iteration fails to reach the stationary
/// distribution; carries the last iterate for inspection.
class Mc4ConvergenceError : public std::runtime_error {
public:
    Mc4ConvergenceError(std::string msg, Eigen::VectorXd last)
        : std::runtime_error(std::move(msg)), last_iterate(std::move(last)) {}

    Eigen::VectorXd last_iterate;
};

/// MC4 transition matrix: from state i the chain moves to j != i with
/// probability 1/n + alpha/n when j majority-dominates i and alpha/n
/// otherwise; the diagonal absorbs the remainder. Exact even-K splits are
/// resolved lexicographically (lower index dominates).
inline Eigen::MatrixXd mc4_transition_matrix(const OrderProfile& profile, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("mc4: alpha must be in (0,1]");
    const MajorityRelation maj(profile);
    const int n = profile.n();
    const int k = profile.k();

    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const int pref = maj.prefer_count(j, i);
            const bool tie = (2 * pref == k);
            const bool dom = (2 * pref > k) || (tie && j < i);
            p(i, j) = dom ? (1.0 + alpha) / n : alpha / n;
            row += p(i, j);
        }
        if (row > 1.0 + 1e-12)
            throw std::invalid_argument("mc4: transition row exceeds 1; reduce alpha");
        p(i, i) = 1.0 - row;
    }
    return p;
}

/**
 * MC4 Markov-chain aggregation. The stationary distribution of the
 * mc4_transition_matrix chain is found by power iteration from the uniform
 * start (the alpha jump makes it unique); assets are then sorted by
 * decreasing stationary mass, ties by ascending index.
 */
inline TotalOrder mc4(const OrderProfile& profile, double alpha = 0.01, double tol = 1e-12,
                      int max_iter = 100000) {
    if (!(tol > 0.0)) throw std::invalid_argument("mc4: tol must be > 0");
    const Eigen::MatrixXd p = mc4_transition_matrix(profile, alpha);
    const int n = profile.n();

    Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / n);
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd next = p.transpose() * x;
        const double l1 = (next - x).cwiseAbs().sum();
        x = next;
        if (l1 < tol) {
            std::vector<double> mass(x.data(), x.data() + x.size());
            return detail::order_by_scores(mass);
        }
    }
    throw Mc4ConvergenceError("mc4: power iteration did not converge", x);
}

/**
 * Local improvement pass (insertion-style). Positions 2..n are visited in
 * order; the asset at each position bubbles upward while it strictly
 * majority-dominates its predecessor. Never increases the Kendall-tau
 * score and the result is stable under every adjacent transposition.
 */
inline TotalOrder local_improvement(const TotalOrder& sigma, const OrderProfile& profile) {
    if (sigma.n() != profile.n()) throw std::invalid_argument("local_improvement: dimension mismatch");
    const MajorityRelation maj(profile);
    std::vector<int> chain = sigma.assets_by_rank();
    const int n = sigma.n();
    for (int l = 1; l < n; ++l) {
        int pos = l;
        while (pos >= 1) {
            const int mover = chain[static_cast<std::size_t>(pos)];
            const int above = chain[static_cast<std::size_t>(pos - 1)];
            if (maj.dominates(above, mover)) break;        // includes mutual dominance
            if (!maj.strictly_dominates(mover, above)) break;
            std::swap(chain[static_cast<std::size_t>(pos)], chain[static_cast<std::size_t>(pos - 1)]);
            --pos;
        }
    }
    return TotalOrder::from_assets_by_rank(chain);
}

/**
 * Exact Kemeny-Young consensus by dynamic programming over asset subsets
 * (O(2^n n^2) with pairwise disagreement weights). Restricted to n <= 12.
 *
 * Ties on the raw score are resolved toward the lexicographically smallest
 * rank sequence, encoded exactly as a base-(n+1) integer so the DP remains
 * purely additive.
 */
inline TotalOrder kemeny_exact(const OrderProfile& profile) {
    const int n = profile.n();
    if (n > 12) throw std::invalid_argument("kemeny_exact: n > 12 exceeds the subset DP capability");

    // v(a,b) = number of orders ranking a before b
    std::vector<std::int64_t> v(static_cast<std::size_t>(n) * n, 0);
    for (const auto& o : profile.orders())
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                if (a != b && o.rank(a) < o.rank(b))
                    ++v[static_cast<std::size_t>(a) * n + static_cast<std::size_t>(b)];

    // Tie-break weight of asset a: placing a at position p adds p * w(a),
    // a base-(n+1) digit encoding of the rank sequence.
    std::vector<std::int64_t> weight(static_cast<std::size_t>(n), 1);
    for (int a = n - 2; a >= 0; --a)
        weight[static_cast<std::size_t>(a)] = weight[static_cast<std::size_t>(a + 1)] * (n + 1);

    struct Cost {
        std::int64_t raw;
        std::int64_t tie;
        bool operator<(const Cost& o) const {
            if (raw != o.raw) return raw < o.raw;
            return tie < o.tie;
        }
        Cost operator+(const Cost& o) const { return Cost{raw + o.raw, tie + o.tie}; }
    };

    const std::size_t full = std::size_t{1} << n;
    const Cost inf{std::numeric_limits<std::int64_t>::max() / 2, 0};
    std::vector<Cost> dp(full, inf);
    dp[0] = Cost{0, 0};

    auto step_cost = [&](std::size_t placed, int a, int position) {
        // a goes above every asset not yet placed and not a itself
        std::int64_t raw = 0;
        for (int u = 0; u < n; ++u) {
            if (u == a || (placed & (std::size_t{1} << u))) continue;
            raw += v[static_cast<std::size_t>(u) * n + static_cast<std::size_t>(a)];
        }
        return Cost{raw, static_cast<std::int64_t>(position) * weight[static_cast<std::size_t>(a)]};
    };

    for (std::size_t mask = 0; mask < full; ++mask) {
        if (dp[mask].raw >= inf.raw) continue;
        const int position = static_cast<int>(std::popcount(mask)) + 1;
        for (int a = 0; a < n; ++a) {
            if (mask & (std::size_t{1} << a)) continue;
            const std::size_t next = mask | (std::size_t{1} << a);
            const Cost cand = dp[mask] + step_cost(mask, a, position);
            if (cand < dp[next]) dp[next] = cand;
        }
    }

    // Reconstruct forward; the minimizing predecessor is unique because the
    // tie component encodes the full rank sequence injectively.
    std::vector<int> assets;
    assets.reserve(static_cast<std::size_t>(n));
    std::size_t mask = full - 1;
    std::vector<int> suffix;  // assets from last position up
    while (mask != 0) {
        const int position = static_cast<int>(std::popcount(mask));
        bool found = false;
        for (int a = 0; a < n && !found; ++a) {
            if (!(mask & (std::size_t{1} << a))) continue;
            const std::size_t prev = mask & ~(std::size_t{1} << a);
            if (dp[prev].raw >= inf.raw) continue;
            const Cost cand = dp[prev] + step_cost(prev, a, position);
            if (cand.raw == dp[mask].raw && cand.tie == dp[mask].tie) {
                suffix.push_back(a);
                mask = prev;
                found = true;
            }
        }
        if (!found) throw std::runtime_error("kemeny_exact: reconstruction failed");
    }
    assets.assign(suffix.rbegin(), suffix.rend());
    return TotalOrder::from_assets_by_rank(assets);
}

}  // namespace rankfolio::aggregation
