#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "rankfolio/rng.hpp"
#include "rankfolio/solvers.hpp"
#include "rankfolio/stats.hpp"

using namespace rankfolio;
using core_model::CovarianceMatrix;
using solvers::ScenarioSet;

namespace {

CovarianceMatrix random_spd(int n, Rng& rng) {
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = norm_ppf(rng.uniform01());
    Eigen::MatrixXd s = a * a.transpose() / n + 0.3 * Eigen::MatrixXd::Identity(n, n);
    return CovarianceMatrix(0.5 * (s + s.transpose()));
}

Eigen::VectorXd random_mu(int n, Rng& rng, double scale = 0.3) {
    Eigen::VectorXd mu(n);
    for (int i = 0; i < n; ++i) mu[i] = scale * norm_ppf(rng.uniform01());
    return mu;
}

ScenarioSet random_scenarios(int n, int k, Rng& rng) {
    std::vector<Eigen::VectorXd> mus;
    for (int i = 0; i < k; ++i) mus.push_back(random_mu(n, rng));
    return ScenarioSet(std::move(mus), random_spd(n, rng), 1.0 + 2.0 * rng.uniform01());
}

}  // namespace

TEST_CASE("mvo closed-form examples") {
    const CovarianceMatrix id2(Eigen::MatrixXd::Identity(2, 2));

    // interior KKT solution
    auto r = solvers::solve_mvo((Eigen::VectorXd(2) << 0.1, 0.0).finished(), id2, 1.0);
    CHECK(r.w.weights()[0] == Catch::Approx(0.55).margin(1e-8));
    CHECK(r.w.weights()[1] == Catch::Approx(0.45).margin(1e-8));
    CHECK(r.kkt_residual <= 1e-8);

    // active nonnegativity bound
    auto r2 = solvers::solve_mvo((Eigen::VectorXd(2) << 10.0, 0.0).finished(), id2, 1.0);
    CHECK(r2.w.weights()[0] == Catch::Approx(1.0).margin(1e-9));
    CHECK(r2.w.weights()[1] == Catch::Approx(0.0).margin(1e-9));

    // constant mu: symmetry forces uniform weights
    const CovarianceMatrix id4(Eigen::MatrixXd::Identity(4, 4));
    auto r3 = solvers::solve_mvo(Eigen::VectorXd::Constant(4, 0.07), id4, 2.5);
    for (int i = 0; i < 4; ++i) CHECK(r3.w.weights()[i] == Catch::Approx(0.25).margin(1e-9));
}

TEST_CASE("maxmin worked example and K=1 collapse") {
    const CovarianceMatrix id2(Eigen::MatrixXd::Identity(2, 2));
    std::vector<Eigen::VectorXd> mus{(Eigen::VectorXd(2) << 0.1, 0.0).finished(),
                                     (Eigen::VectorXd(2) << 0.0, 0.1).finished()};
    const ScenarioSet scen(mus, id2, 1.0);
    auto r = solvers::solve_maxmin(scen);
    CHECK(r.w.weights()[0] == Catch::Approx(0.5).margin(1e-8));
    CHECK(r.objective == Catch::Approx(-0.20).margin(1e-8));
    CHECK(r.active_scenarios.size() == 2);

    const ScenarioSet single({mus[0]}, id2, 1.0);
    auto r1 = solvers::solve_maxmin(single);
    auto rm = solvers::solve_mvo(mus[0], id2, 1.0);
    CHECK((r1.w.weights() - rm.w.weights()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(r1.objective == Catch::Approx(rm.objective).margin(1e-10));
}

TEST_CASE("min regret worked examples") {
    const CovarianceMatrix id2(Eigen::MatrixXd::Identity(2, 2));
    std::vector<Eigen::VectorXd> mus{(Eigen::VectorXd(2) << 0.1, 0.0).finished(),
                                     (Eigen::VectorXd(2) << 0.0, 0.1).finished()};

    // K = 1: zero regret at the scenario's own optimum
    const ScenarioSet single({mus[0]}, id2, 1.0);
    auto r1 = solvers::solve_min_regret(single);
    auto rm = solvers::solve_mvo(mus[0], id2, 1.0);
    CHECK(r1.objective == Catch::Approx(0.0).margin(1e-9));
    CHECK((r1.w.weights() - rm.w.weights()).cwiseAbs().maxCoeff() < 1e-7);

    // symmetric pair: the balanced portfolio minimizes regret
    const ScenarioSet pair(mus, id2, 1.0);
    auto r2 = solvers::solve_min_regret(pair);
    CHECK(r2.w.weights()[0] == Catch::Approx(0.5).margin(1e-7));
    CHECK(r2.objective >= 0.0);
}

TEST_CASE("soft robustness limit identities") {
    Rng rng(404);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(2));
        const int k = 2 + static_cast<int>(rng.below(5));
        const ScenarioSet scen = random_scenarios(n, k, rng);

        auto soft1 = solvers::solve_soft(scen, 1.0);
        auto maxmin = solvers::solve_maxmin(scen);
        CHECK(soft1.objective == Catch::Approx(maxmin.objective).margin(1e-8));

        auto softk = solvers::solve_soft(scen, 1.0 / k);
        double best_single = -1e300;
        for (const auto& mu : scen.mus) {
            auto r = solvers::solve_mvo(mu, scen.sigma, scen.delta);
            best_single = std::max(best_single, r.objective);
        }
        CHECK(softk.objective == Catch::Approx(best_single).margin(1e-8));
    }
}

TEST_CASE("soft quantile objective is non-increasing in gamma") {
    Rng rng(405);
    const ScenarioSet scen = random_scenarios(3, 4, rng);
    double prev = std::numeric_limits<double>::infinity();
    for (double gamma : {0.25, 0.5, 0.75, 1.0}) {
        const double obj = solvers::solve_soft(scen, gamma).objective;
        CHECK(obj <= prev + 1e-10);
        prev = obj;
    }
}

TEST_CASE("soft dominated-scenario example") {
    const CovarianceMatrix id2(Eigen::MatrixXd::Identity(2, 2));
    std::vector<Eigen::VectorXd> mus{(Eigen::VectorXd(2) << 0.1, 0.0).finished(),
                                     (Eigen::VectorXd(2) << 0.2, 0.0).finished()};
    const ScenarioSet scen(mus, id2, 1.0);
    auto soft = solvers::solve_soft(scen, 0.5);  // ceil(0.5*2) = 1: best scenario wins
    auto best = solvers::solve_mvo(mus[1], id2, 1.0);
    CHECK(soft.objective == Catch::Approx(best.objective).margin(1e-9));
    CHECK((soft.w.weights() - best.w.weights()).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("soft budget guard") {
    Rng rng(406);
    const ScenarioSet scen = random_scenarios(2, 30, rng);
    CHECK_THROWS_AS(solvers::solve_soft(scen, 0.5, 1e-8, 1000), solvers::SubsetBudgetError);
}

TEST_CASE("all four solvers match the lattice oracle on random instances") {
    Rng rng(407);
    for (int trial = 0; trial < 12; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(2));
        const int k = 1 + static_cast<int>(rng.below(4));
        const ScenarioSet scen = random_scenarios(n, k, rng);
        const Eigen::MatrixXd& s = scen.sigma.matrix();

        auto mvo = solvers::solve_mvo(scen.mus[0], scen.sigma, scen.delta);
        const double mvo_oracle = oracle::simplex_lattice_max(
            [&](const Eigen::VectorXd& w) { return oracle::mvo_objective(w, scen.mus[0], s, scen.delta); },
            n, {mvo.w.weights()});
        CHECK(mvo.objective == Catch::Approx(mvo_oracle).margin(1e-6));

        auto mm = solvers::solve_maxmin(scen);
        const double mm_oracle = oracle::simplex_lattice_max(
            [&](const Eigen::VectorXd& w) {
                double v = std::numeric_limits<double>::infinity();
                for (const auto& mu : scen.mus) v = std::min(v, oracle::mvo_objective(w, mu, s, scen.delta));
                return v;
            },
            n, {mm.w.weights()});
        CHECK(mm.objective == Catch::Approx(mm_oracle).margin(1e-6));

        Eigen::VectorXd f(k);
        for (int i = 0; i < k; ++i)
            f[i] = solvers::solve_mvo(scen.mus[static_cast<std::size_t>(i)], scen.sigma, scen.delta).objective;
        auto mr = solvers::solve_min_regret(scen);
        const double mr_oracle = -oracle::simplex_lattice_max(
            [&](const Eigen::VectorXd& w) {
                double worst = -std::numeric_limits<double>::infinity();
                for (int i = 0; i < k; ++i)
                    worst = std::max(worst,
                                     f[i] - oracle::mvo_objective(w, scen.mus[static_cast<std::size_t>(i)], s, scen.delta));
                return -worst;
            },
            n, {mr.w.weights()});
        CHECK(mr.objective == Catch::Approx(mr_oracle).margin(1e-6));

        // the quantile objective is not concave, so the oracle decomposes it
        // over scenario subsets, each a concave max-min search
        const double gamma = 0.5;
        auto soft = solvers::solve_soft(scen, gamma);
        const int m = static_cast<int>(std::ceil(gamma * k - 1e-9));
        double soft_oracle = -std::numeric_limits<double>::infinity();
        for (const auto& subset : oracle::subsets_of_size(k, m)) {
            const double v = oracle::simplex_lattice_max(
                [&](const Eigen::VectorXd& w) {
                    double worst = std::numeric_limits<double>::infinity();
                    for (int i : subset)
                        worst = std::min(worst, oracle::mvo_objective(
                                                    w, scen.mus[static_cast<std::size_t>(i)], s, scen.delta));
                    return worst;
                },
                n, {soft.w.weights()});
            soft_oracle = std::max(soft_oracle, v);
        }
        CHECK(soft.objective == Catch::Approx(soft_oracle).margin(1e-6));
    }
}

TEST_CASE("returned portfolios are feasible") {
    Rng rng(408);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(7));
        const int k = 1 + static_cast<int>(rng.below(6));
        const ScenarioSet scen = random_scenarios(n, k, rng);
        for (const auto& rep :
             {solvers::solve_maxmin(scen), solvers::solve_min_regret(scen), solvers::solve_soft(scen, 0.5)}) {
            CHECK(std::fabs(rep.w.weights().sum() - 1.0) <= 1e-9);
            CHECK(rep.w.weights().minCoeff() >= 0.0);
            CHECK(rep.kkt_residual <= 1e-8);
        }
    }
}

TEST_CASE("strict concavity: solutions agree from different warm starts") {
    Rng rng(409);
    for (int trial = 0; trial < 15; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(5));
        const int k = 1 + static_cast<int>(rng.below(5));
        const ScenarioSet scen = random_scenarios(n, k, rng);

        Eigen::VectorXd vertex = Eigen::VectorXd::Zero(n);
        vertex[static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)))] = 1.0;

        auto a = solvers::solve_maxmin(scen);
        auto b = solvers::solve_maxmin(scen, 1e-8, &vertex);
        CHECK((a.w.weights() - b.w.weights()).cwiseAbs().maxCoeff() <= 1e-6);

        auto c = solvers::solve_mvo(scen.mus[0], scen.sigma, scen.delta);
        auto d = solvers::solve_mvo(scen.mus[0], scen.sigma, scen.delta, 1e-8, &vertex);
        CHECK((c.w.weights() - d.w.weights()).cwiseAbs().maxCoeff() <= 1e-6);
    }
}

TEST_CASE("robustness ordering across gamma and the regret sanity bound") {
    Rng rng(410);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(4));
        const int k = 2 + static_cast<int>(rng.below(5));
        const ScenarioSet scen = random_scenarios(n, k, rng);

        const double mm = solvers::solve_maxmin(scen).objective;
        double maxf = -1e300;
        for (const auto& mu : scen.mus)
            maxf = std::max(maxf, solvers::solve_mvo(mu, scen.sigma, scen.delta).objective);
        for (double gamma : {0.3, 0.6, 1.0}) {
            const double obj = solvers::solve_soft(scen, gamma).objective;
            CHECK(mm <= obj + 1e-8);
            CHECK(obj <= maxf + 1e-8);
        }

        // regret of the optimum cannot exceed the equal-weight portfolio's
        const auto mr = solvers::solve_min_regret(scen);
        const Eigen::VectorXd eq = Eigen::VectorXd::Constant(n, 1.0 / n);
        double eq_regret = -1e300;
        for (const auto& mu : scen.mus) {
            const double fk = solvers::solve_mvo(mu, scen.sigma, scen.delta).objective;
            eq_regret = std::max(eq_regret, fk - oracle::mvo_objective(eq, mu, scen.sigma.matrix(), scen.delta));
        }
        CHECK(mr.objective <= eq_regret + 1e-8);
        CHECK(mr.objective >= 0.0);
    }
}

TEST_CASE("min regret optimum beats sampled feasible portfolios") {
    Rng rng(411);
    const ScenarioSet scen = random_scenarios(2, 3, rng);
    Eigen::VectorXd f(3);
    for (int i = 0; i < 3; ++i)
        f[i] = solvers::solve_mvo(scen.mus[static_cast<std::size_t>(i)], scen.sigma, scen.delta).objective;
    const auto mr = solvers::solve_min_regret(scen);
    for (int draw = 0; draw < 1000; ++draw) {
        Eigen::VectorXd w(2);
        w[0] = rng.uniform01();
        w[1] = 1.0 - w[0];
        double regret = -1e300;
        for (int i = 0; i < 3; ++i)
            regret = std::max(regret, f[i] - oracle::mvo_objective(w, scen.mus[static_cast<std::size_t>(i)],
                                                                   scen.sigma.matrix(), scen.delta));
        CHECK(mr.objective <= regret + 1e-8);
    }
}

TEST_CASE("near-identical scenarios solve cleanly at degenerate vertices") {
    // scenario spreads of 1e-4 and below used to stall the active set with
    // grazing directions at fully determined vertices
    Rng rng(412);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 3 + static_cast<int>(rng.below(8));
        const int k = 5 + static_cast<int>(rng.below(16));
        const Eigen::VectorXd base = random_mu(n, rng, 0.02);
        std::vector<Eigen::VectorXd> mus;
        for (int i = 0; i < k; ++i) {
            Eigen::VectorXd noise(n);
            for (int j = 0; j < n; ++j) noise[j] = 1e-4 * norm_ppf(rng.uniform01());
            mus.push_back(base + noise);
        }
        Eigen::MatrixXd s = 0.006 * Eigen::MatrixXd::Identity(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j) s(i, j) = 0.002;
        const ScenarioSet scen(mus, CovarianceMatrix(s), 3.0);

        const auto mm = solvers::solve_maxmin(scen);
        CHECK(mm.kkt_residual <= 1e-8);
        const auto mr = solvers::solve_min_regret(scen);
        CHECK(mr.kkt_residual <= 1e-8);
        CHECK(mr.objective >= 0.0);
        double prev = std::numeric_limits<double>::infinity();
        for (double gamma : {0.25, 0.5, 0.75, 1.0}) {
            const auto soft = solvers::solve_soft(scen, gamma);
            CHECK(soft.kkt_residual <= 1e-8);
            CHECK(mm.objective <= soft.objective + 1e-8);
            CHECK(soft.objective <= prev + 1e-10);
            prev = soft.objective;
        }
    }
}

TEST_CASE("scenario set validation") {
    const CovarianceMatrix id2(Eigen::MatrixXd::Identity(2, 2));
    CHECK_THROWS_AS(ScenarioSet({}, id2, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(ScenarioSet({Eigen::VectorXd::Zero(3)}, id2, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(ScenarioSet({Eigen::VectorXd::Zero(2)}, id2, 0.0), std::invalid_argument);
}
