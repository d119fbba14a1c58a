#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rankfolio/core_model.hpp"
#include "rankfolio/rng.hpp"

namespace rankfolio::ordinal {

using core_model::TotalOrder;
using BigInt = boost::multiprecision::cpp_int;

/// Number of discordant pairs between two rankings (raw Kendall-tau count).
inline std::int64_t kendall_tau_raw(const TotalOrder& a, const TotalOrder& b) {
    if (a.n() != b.n()) throw std::invalid_argument("kendall_tau: mismatched n");
    const int n = a.n();
    std::int64_t discordant = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const bool ai = a.rank(i) < a.rank(j);
            const bool bi = b.rank(i) < b.rank(j);
            if (ai != bi) ++discordant;
        }
    return discordant;
}

/// Normalized Kendall-tau distance in [0,1]: discordant pairs over n(n-1)/2.
inline double kendall_tau(const TotalOrder& a, const TotalOrder& b) {
    if (a.n() < 2) throw std::invalid_argument("kendall_tau: need n >= 2");
    const double pairs = 0.5 * static_cast<double>(a.n()) * static_cast<double>(a.n() - 1);
    return static_cast<double>(kendall_tau_raw(a, b)) / pairs;
}

/// Spearman footrule: sum over assets of |rank_a(i) - rank_b(i)|.
inline std::int64_t spearman_footrule(const TotalOrder& a, const TotalOrder& b) {
    if (a.n() != b.n()) throw std::invalid_argument("spearman_footrule: mismatched n");
    std::int64_t sum = 0;
    for (int i = 0; i < a.n(); ++i) sum += std::llabs(static_cast<std::int64_t>(a.rank(i)) - b.rank(i));
    return sum;
}

/**
 * Table of Mahonian numbers: counts(m, t) = number of permutations of m
 * elements with exactly t inversions. Exact big-integer arithmetic; the
 * column range may be capped at the largest inversion count of interest to
 * bound memory for large n.
 */
class MahonianTable {
public:
    MahonianTable(int n, std::vector<std::vector<BigInt>> counts, std::int64_t max_inv)
        : n_(n), max_inv_(max_inv), counts_(std::move(counts)) {}

    int n() const { return n_; }
    std::int64_t max_inv() const { return max_inv_; }

    /// counts(m, t); zero outside the stored/valid range.
    const BigInt& count(int m, std::int64_t t) const {
        static const BigInt zero = 0;
        if (m < 0 || m > n_ || t < 0 || t > max_inv_) return zero;
        const auto& row = counts_[static_cast<std::size_t>(m)];
        if (t >= static_cast<std::int64_t>(row.size())) return zero;
        return row[static_cast<std::size_t>(t)];
    }

private:
    int n_;
    std::int64_t max_inv_;
    std::vector<std::vector<BigInt>> counts_;
};

/**
 * Builds the Mahonian table for permutations of up to n elements via the
 * prefix-sum form of the recurrence
 *   counts(m, t) = sum_{j=0..m-1} counts(m-1, t-j).
 *
 * max_inv < 0 keeps the full range n(n-1)/2.
 */
inline MahonianTable build_mahonian(int n, std::int64_t max_inv = -1) {
    if (n < 1) throw std::invalid_argument("build_mahonian: n must be >= 1");
    const std::int64_t full = static_cast<std::int64_t>(n) * (n - 1) / 2;
    if (max_inv < 0 || max_inv > full) max_inv = full;

    std::vector<std::vector<BigInt>> counts(static_cast<std::size_t>(n) + 1);
    for (int m = 0; m <= n; ++m) {
        const std::int64_t row_max = std::min<std::int64_t>(max_inv, static_cast<std::int64_t>(m) * (m - 1) / 2);
        auto& row = counts[static_cast<std::size_t>(m)];
        row.assign(static_cast<std::size_t>(row_max) + 1, BigInt(0));
        row[0] = 1;
        if (m <= 1) continue;
        const auto& prev = counts[static_cast<std::size_t>(m - 1)];
        auto prev_at = [&](std::int64_t t) -> BigInt {
            if (t < 0 || t >= static_cast<std::int64_t>(prev.size())) return BigInt(0);
            return prev[static_cast<std::size_t>(t)];
        };
        // counts(m,t) = counts(m,t-1) + counts(m-1,t) - counts(m-1,t-m)
        for (std::int64_t t = 1; t <= row_max; ++t) {
            row[static_cast<std::size_t>(t)] =
                row[static_cast<std::size_t>(t - 1)] + prev_at(t) - prev_at(t - m);
        }
    }
    return MahonianTable(n, std::move(counts), max_inv);
}

/// Target distance: normalized Kendall-tau d mapped onto an exact inversion
/// count t = round(d * n(n-1)/2), ties away from zero.
struct DistanceSpec {
    double d;
    std::int64_t t;

    static DistanceSpec from_normalized(double d, int n) {
        if (n < 1) throw std::invalid_argument("DistanceSpec: n must be >= 1");
        if (!(d >= 0.0 && d <= 1.0)) throw std::invalid_argument("DistanceSpec: d must be in [0,1]");
        const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
        const std::int64_t t = std::llround(d * pairs);
        return DistanceSpec{d, t};
    }

    static DistanceSpec from_raw(std::int64_t t, int n) {
        const std::int64_t full = static_cast<std::int64_t>(n) * (n - 1) / 2;
        if (t < 0 || t > full) throw std::invalid_argument("DistanceSpec: t out of range");
        const double d = full > 0 ? static_cast<double>(t) / static_cast<double>(full) : 0.0;
        return DistanceSpec{d, t};
    }
};

namespace detail {

/// Uniform big integer in [0, bound) by rejection on the bit length.
inline BigInt uniform_below(Rng& rng, const BigInt& bound) {
    if (bound <= 0) throw std::invalid_argument("uniform_below: bound must be positive");
    if (bound == 1) return BigInt(0);
    const unsigned bits = boost::multiprecision::msb(bound) + 1;
    const unsigned chunks = (bits + 63) / 64;
    const unsigned top_bits = bits - 64 * (chunks - 1);
    const std::uint64_t top_mask = top_bits >= 64 ? ~0ULL : ((1ULL << top_bits) - 1ULL);
    while (true) {
        BigInt x = 0;
        for (unsigned c = 0; c < chunks; ++c) {
            std::uint64_t w = rng.bits();
            if (c + 1 == chunks) w &= top_mask;
            x <<= 64;
            x += w;
        }
        if (x < bound) return x;
    }
}

}  // namespace detail

/**
 * Draws a total order uniformly at random among all orders whose raw
 * Kendall-tau distance from ref is exactly spec.t.
 *
 * The draw samples an inversion table sequentially, weighting each entry by
 * Mahonian counts, builds the corresponding permutation and composes it with
 * ref. Exact uniformity over the admissible set; no rejection, no MCMC.
 */
inline TotalOrder sample_order_at_distance(const TotalOrder& ref, const DistanceSpec& spec, Rng& rng,
                                           const MahonianTable& table) {
    const int n = ref.n();
    const std::int64_t full = static_cast<std::int64_t>(n) * (n - 1) / 2;
    if (spec.t < 0 || spec.t > full) throw std::invalid_argument("sample_order_at_distance: t out of range");
    if (table.n() < n || table.max_inv() < spec.t)
        throw std::invalid_argument("sample_order_at_distance: Mahonian table too small");

    std::int64_t remaining = spec.t;
    // Insertion sequence over values 0..n-1: value m-1 is inserted with j
    // smaller values after it, contributing exactly j inversions.
    std::vector<int> seq;
    seq.reserve(static_cast<std::size_t>(n));
    std::vector<int> offsets(static_cast<std::size_t>(n), 0);
    for (int m = n; m >= 2; --m) {
        const BigInt& total = table.count(m, remaining);
        if (total == 0) throw std::runtime_error("sample_order_at_distance: empty admissible set");
        BigInt r = detail::uniform_below(rng, total);
        int chosen = -1;
        for (int j = 0; j < m; ++j) {
            const BigInt& w = table.count(m - 1, remaining - j);
            if (r < w) {
                chosen = j;
                break;
            }
            r -= w;
        }
        if (chosen < 0) throw std::runtime_error("sample_order_at_distance: weight walk failed");
        offsets[static_cast<std::size_t>(m - 1)] = chosen;
        remaining -= chosen;
    }
    seq.push_back(0);
    for (int v = 1; v < n; ++v) {
        const int j = offsets[static_cast<std::size_t>(v)];
        seq.insert(seq.end() - j, v);
    }

    std::vector<int> pos(static_cast<std::size_t>(n), 0);
    for (int p = 0; p < n; ++p) pos[static_cast<std::size_t>(seq[static_cast<std::size_t>(p)])] = p;

    std::vector<int> out_ranks(static_cast<std::size_t>(n), 0);
    for (int asset = 0; asset < n; ++asset)
        out_ranks[static_cast<std::size_t>(asset)] = pos[static_cast<std::size_t>(ref.rank(asset) - 1)] + 1;
    return TotalOrder::from_ranks(std::move(out_ranks));
}

inline TotalOrder sample_order_at_distance(const TotalOrder& ref, const DistanceSpec& spec, Rng& rng) {
    const MahonianTable table = build_mahonian(ref.n(), spec.t);
    return sample_order_at_distance(ref, spec, rng, table);
}

}  // namespace rankfolio::ordinal
