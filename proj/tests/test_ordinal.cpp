#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "rankfolio/ordinal.hpp"

#include <map>

using namespace rankfolio;
using core_model::TotalOrder;
using ordinal::DistanceSpec;

TEST_CASE("kendall tau basic values") {
    const auto a = TotalOrder::from_assets_by_rank({0, 1, 2, 3});
    CHECK(ordinal::kendall_tau(a, a) == 0.0);
    CHECK(ordinal::kendall_tau(a, a.reversed()) == 1.0);

    const auto id3 = TotalOrder::from_ranks({1, 2, 3});
    const auto swapped = TotalOrder::from_ranks({2, 1, 3});
    CHECK(ordinal::kendall_tau(id3, swapped) == Catch::Approx(1.0 / 3.0));

    CHECK_THROWS_AS(ordinal::kendall_tau(id3, a), std::invalid_argument);
}

TEST_CASE("spearman footrule basic values") {
    const auto id3 = TotalOrder::identity(3);
    CHECK(ordinal::spearman_footrule(id3, id3) == 0);
    CHECK(ordinal::spearman_footrule(id3, id3.reversed()) == 4);
}

TEST_CASE("kendall tau is a metric (exhaustive n <= 5)") {
    for (int n = 2; n <= 5; ++n) {
        const auto orders = oracle::all_orders(n);
        const std::size_t m = orders.size();
        std::vector<std::vector<double>> d(m, std::vector<double>(m, 0.0));
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                d[i][j] = ordinal::kendall_tau(orders[i], orders[j]);
                CHECK(d[i][j] == static_cast<double>(oracle::discordant_pairs(orders[i], orders[j])) /
                                     (0.5 * n * (n - 1)));
            }
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                REQUIRE(d[i][j] == d[j][i]);
                REQUIRE((d[i][j] == 0.0) == (i == j));
            }
        if (n <= 4) {
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < m; ++j)
                    for (std::size_t l = 0; l < m; ++l)
                        REQUIRE(d[i][l] <= d[i][j] + d[j][l] + 1e-12);
        }
    }
}

TEST_CASE("Diaconis-Graham sandwich in raw counts (exhaustive by invariance, n <= 7)") {
    // Both distances are right-invariant, so checking every permutation
    // against the identity covers all pairs.
    for (int n = 2; n <= 7; ++n) {
        const auto id = TotalOrder::identity(n);
        for (const auto& pi : oracle::all_orders(n)) {
            const std::int64_t inv = ordinal::kendall_tau_raw(pi, id);
            const std::int64_t f = ordinal::spearman_footrule(pi, id);
            REQUIRE(inv <= f);
            REQUIRE(f <= 2 * inv);
        }
    }
    // spot-check the invariance claim itself on random pairs
    Rng rng(5150);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 4 + static_cast<int>(rng.below(4));
        const auto base = oracle::all_orders(n);
        const auto& a = base[rng.below(base.size())];
        const auto& b = base[rng.below(base.size())];
        std::vector<int> relabel(static_cast<std::size_t>(n));
        std::iota(relabel.begin(), relabel.end(), 0);
        for (int i = n - 1; i > 0; --i)
            std::swap(relabel[static_cast<std::size_t>(i)],
                      relabel[rng.below(static_cast<std::uint64_t>(i + 1))]);
        std::vector<int> ra(static_cast<std::size_t>(n)), rb(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            ra[static_cast<std::size_t>(relabel[static_cast<std::size_t>(i)])] = a.rank(i);
            rb[static_cast<std::size_t>(relabel[static_cast<std::size_t>(i)])] = b.rank(i);
        }
        const auto a2 = TotalOrder::from_ranks(ra);
        const auto b2 = TotalOrder::from_ranks(rb);
        CHECK(ordinal::kendall_tau_raw(a, b) == ordinal::kendall_tau_raw(a2, b2));
        CHECK(ordinal::spearman_footrule(a, b) == ordinal::spearman_footrule(a2, b2));
    }
}

TEST_CASE("mahonian table small values") {
    const auto t3 = ordinal::build_mahonian(3);
    CHECK(t3.count(3, 0) == 1);
    CHECK(t3.count(3, 1) == 2);
    CHECK(t3.count(3, 2) == 2);
    CHECK(t3.count(3, 3) == 1);
    CHECK(t3.count(3, 4) == 0);

    const auto t4 = ordinal::build_mahonian(4);
    // against enumeration
    std::map<std::int64_t, int> hist;
    const auto id = TotalOrder::identity(4);
    for (const auto& p : oracle::all_orders(4)) hist[ordinal::kendall_tau_raw(p, id)]++;
    for (const auto& [t, cnt] : hist) CHECK(t4.count(4, t) == cnt);
    CHECK(t4.count(4, 3) == 6);
}

TEST_CASE("mahonian rows sum to factorials up to 20 in exact arithmetic") {
    const auto table = ordinal::build_mahonian(20);
    ordinal::BigInt factorial = 1;
    for (int m = 1; m <= 20; ++m) {
        factorial *= m;
        ordinal::BigInt sum = 0;
        for (std::int64_t t = 0; t <= static_cast<std::int64_t>(m) * (m - 1) / 2; ++t)
            sum += table.count(m, t);
        REQUIRE(sum == factorial);
        REQUIRE(table.count(m, 0) == 1);
    }
}

TEST_CASE("distance spec rounds to nearest, ties away from zero") {
    CHECK(DistanceSpec::from_normalized(0.0, 5).t == 0);
    CHECK(DistanceSpec::from_normalized(1.0, 5).t == 10);
    CHECK(DistanceSpec::from_normalized(0.25, 5).t == 3);  // 2.5 rounds up
    CHECK(DistanceSpec::from_normalized(0.47, 38).t == 330);
    CHECK_THROWS_AS(DistanceSpec::from_normalized(1.5, 5), std::invalid_argument);
    CHECK_THROWS_AS(DistanceSpec::from_raw(11, 5), std::invalid_argument);
}

TEST_CASE("sampling at distance hits the exact raw distance") {
    Rng rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(9));
        const std::int64_t full = static_cast<std::int64_t>(n) * (n - 1) / 2;
        const std::int64_t t = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(full + 1)));
        const auto spec = DistanceSpec::from_raw(t, n);
        // random reference order
        std::vector<int> assets(static_cast<std::size_t>(n));
        std::iota(assets.begin(), assets.end(), 0);
        for (int i = n - 1; i > 0; --i)
            std::swap(assets[static_cast<std::size_t>(i)],
                      assets[rng.below(static_cast<std::uint64_t>(i + 1))]);
        const auto ref = TotalOrder::from_assets_by_rank(assets);
        const auto sampled = ordinal::sample_order_at_distance(ref, spec, rng);
        REQUIRE(ordinal::kendall_tau_raw(sampled, ref) == t);
    }
}

TEST_CASE("sampling endpoints are deterministic") {
    const auto ref = TotalOrder::from_assets_by_rank({2, 0, 3, 1});
    Rng rng(1);
    const auto zero = ordinal::sample_order_at_distance(ref, DistanceSpec::from_normalized(0.0, 4), rng);
    CHECK(zero == ref);
    const auto one = ordinal::sample_order_at_distance(ref, DistanceSpec::from_normalized(1.0, 4), rng);
    CHECK(one == ref.reversed());
}

TEST_CASE("sampling at fixed distance is uniform over the admissible set") {
    const auto ref = TotalOrder::identity(4);
    const auto spec = DistanceSpec::from_raw(2, 4);

    // admissible set by enumeration
    std::vector<TotalOrder> admissible;
    for (const auto& p : oracle::all_orders(4))
        if (oracle::discordant_pairs(p, ref) == 2) admissible.push_back(p);
    REQUIRE(admissible.size() == 5);

    std::map<std::vector<int>, int> freq;
    Rng rng(31337);
    const int draws = 10000;
    const auto table = ordinal::build_mahonian(4, 2);
    for (int i = 0; i < draws; ++i) {
        const auto s = ordinal::sample_order_at_distance(ref, spec, rng, table);
        REQUIRE(ordinal::kendall_tau_raw(s, ref) == 2);
        freq[s.ranks()]++;
    }
    REQUIRE(freq.size() == 5);
    const double expected = draws / 5.0;
    double chi2 = 0.0;
    for (const auto& [ranks, cnt] : freq) chi2 += (cnt - expected) * (cnt - expected) / expected;
    CHECK(chi2 < oracle::chi2_99(4));
}

TEST_CASE("normalized distance of sampled orders matches spec.t exactly") {
    Rng rng(88);
    const auto ref = TotalOrder::identity(6);
    for (std::int64_t t = 0; t <= 15; t += 3) {
        const auto spec = DistanceSpec::from_raw(t, 6);
        for (int i = 0; i < 5; ++i) {
            const auto s = ordinal::sample_order_at_distance(ref, spec, rng);
            CHECK(ordinal::kendall_tau(s, ref) * 15.0 == Catch::Approx(static_cast<double>(t)));
        }
    }
}
