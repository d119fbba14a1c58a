#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rankfolio/aggregation.hpp"
#include "rankfolio/core_model.hpp"
#include "rankfolio/rng.hpp"
#include "rankfolio/solvers.hpp"
#include "rankfolio/stats.hpp"

namespace rankfolio::estimator {

using core_model::CovarianceMatrix;
using core_model::ModelConfig;
using core_model::PriorVector;
using core_model::TotalOrder;

/// Gaussian law of the view variable V before truncation:
/// V ~ N(P pi, (tau + c) P Sigma P').
struct ViewDistribution {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;

    ViewDistribution(Eigen::VectorXd mean_, Eigen::MatrixXd cov_)
        : mean(std::move(mean_)), cov(std::move(cov_)) {
        if (cov.rows() != cov.cols() || cov.rows() != mean.size())
            throw std::invalid_argument("ViewDistribution: dimension mismatch");
        const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
        if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
            throw std::invalid_argument("ViewDistribution: covariance not symmetric");
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success)
            throw std::invalid_argument("ViewDistribution: covariance not positive definite");
    }

    Eigen::Index dim() const { return mean.size(); }
};

/// Posterior mean estimate with per-component Monte Carlo standard errors.
struct PosteriorEstimate {
    Eigen::VectorXd mu;
    Eigen::VectorXd se;
    std::int64_t n_samples;

    PosteriorEstimate(Eigen::VectorXd mu_, Eigen::VectorXd se_, std::int64_t n)
        : mu(std::move(mu_)), se(std::move(se_)), n_samples(n) {
        if (mu.size() != se.size()) throw std::invalid_argument("PosteriorEstimate: size mismatch");
        if (!mu.allFinite() || !se.allFinite())
            throw std::invalid_argument("PosteriorEstimate: non-finite entry");
        if (se.minCoeff() < 0.0) throw std::invalid_argument("PosteriorEstimate: negative se");
    }
};

struct SamplerConfig {
    std::int64_t n_samples = 50000;
    std::int64_t burn_in = 2000;
    int batches = 50;
    int warm_start_tries = 1000;
};

/// Raised when the orthant mass is numerically zero and the chain cannot
/// produce finite conditional draws.
class OrthantMassError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

/// Draw from N(mean, sd^2) conditioned on being >= 0, by inverse CDF with a
/// complementary-tail formulation that stays accurate for mean/sd << 0.
inline double truncated_normal_lower0(double mean, double sd, Rng& rng) {
    const double a = -mean / sd;
    const double tail = norm_cdf_c(a);  // P(X >= a) for X ~ N(0,1)
    if (!(tail > 0.0))
        throw OrthantMassError("truncated draw: orthant slice has numerically zero mass");
    const double u = rng.uniform01();
    const double q = tail * (1.0 - u);
    const double x = -norm_ppf(q);  // upper-tail quantile
    const double v = mean + sd * x;
    return v < 0.0 ? 0.0 : v;
}

}  // namespace detail

/**
 * Estimates E(V | V >= 0) for V ~ N(mean, cov) restricted to the nonnegative
 * orthant with a systematic-scan Gibbs sampler over univariate truncated
 * conditionals.
 *
 * The chain warm-starts from an accept-reject draw of the untruncated law;
 * if no attempt lands in the orthant the chain starts from the clamped mean
 * instead (burn-in washes the choice out). Standard errors come from batch
 * means; the trailing samples that do not fill a complete batch are dropped,
 * so the effective sample count is batches * floor(n_samples / batches).
 *
 * Throws OrthantMassError when the orthant mass is numerically zero.
 */
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> truncated_mvn_mean(
    const ViewDistribution& dist, std::int64_t n_samples, std::int64_t burn_in, Rng& rng,
    int batches = 50, int warm_start_tries = 1000) {
    if (n_samples < 1000) throw std::invalid_argument("truncated_mvn_mean: need n_samples >= 1000");
    if (burn_in < 0) throw std::invalid_argument("truncated_mvn_mean: burn_in must be >= 0");
    if (batches < 2) throw std::invalid_argument("truncated_mvn_mean: need >= 2 batches");

    const Eigen::Index m = dist.dim();
    Eigen::LLT<Eigen::MatrixXd> llt(dist.cov);
    const Eigen::MatrixXd chol_l = llt.matrixL();
    const Eigen::MatrixXd precision =
        llt.solve(Eigen::MatrixXd::Identity(m, m));  // factor-based, no explicit inverse path
    Eigen::VectorXd cond_sd(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double pii = precision(i, i);
        if (!(pii > 0.0)) throw OrthantMassError("truncated_mvn_mean: degenerate conditional");
        cond_sd[i] = 1.0 / std::sqrt(pii);
    }

    // Accept-reject warm start on the untruncated Gaussian.
    Eigen::VectorXd v;
    bool started = false;
    for (int attempt = 0; attempt < warm_start_tries && !started; ++attempt) {
        Eigen::VectorXd z(m);
        for (Eigen::Index i = 0; i < m; ++i) z[i] = norm_ppf(rng.uniform01());
        Eigen::VectorXd cand = dist.mean + chol_l * z;
        if ((cand.array() >= 0.0).all()) {
            v = cand;
            started = true;
        }
    }
    if (!started) v = dist.mean.cwiseMax(0.0);

    const std::int64_t batch_size = n_samples / batches;
    const std::int64_t effective = batch_size * batches;

    Eigen::VectorXd sum = Eigen::VectorXd::Zero(m);
    Eigen::MatrixXd batch_sums = Eigen::MatrixXd::Zero(m, batches);

    for (std::int64_t sweep = 0; sweep < burn_in + effective; ++sweep) {
        for (Eigen::Index i = 0; i < m; ++i) {
            double dot = 0.0;
            for (Eigen::Index j = 0; j < m; ++j)
                if (j != i) dot += precision(i, j) * (v[j] - dist.mean[j]);
            const double cm = dist.mean[i] - dot * cond_sd[i] * cond_sd[i];
            v[i] = detail::truncated_normal_lower0(cm, cond_sd[i], rng);
        }
        if (sweep >= burn_in) {
            const std::int64_t s = sweep - burn_in;
            sum += v;
            batch_sums.col(static_cast<Eigen::Index>(s / batch_size)) += v;
        }
    }

    Eigen::VectorXd mean_est = sum / static_cast<double>(effective);
    Eigen::VectorXd se(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        double var = 0.0;
        for (int b = 0; b < batches; ++b) {
            const double bm = batch_sums(i, b) / static_cast<double>(batch_size);
            var += (bm - mean_est[i]) * (bm - mean_est[i]);
        }
        var /= static_cast<double>(batches - 1);
        se[i] = std::sqrt(var / static_cast<double>(batches));
    }
    if (!mean_est.allFinite() || !se.allFinite())
        throw OrthantMassError("truncated_mvn_mean: estimate is not finite");
    return {std::move(mean_est), std::move(se)};
}

/**
 * Extended Black-Litterman posterior mean for one qualitative view:
 *
 *   mu = pi + tau/(tau+c) * Sigma P' (P Sigma P')^{-1} (E(V | V >= 0) - P pi)
 *
 * with V ~ N(P pi, (tau+c) P Sigma P'). The correction term uses a Cholesky
 * solve of P Sigma P'; sampler standard errors propagate linearly through
 * the same map.
 */
inline PosteriorEstimate ebl_posterior(const PriorVector& pi, const CovarianceMatrix& sigma,
                                       const TotalOrder& order, const ModelConfig& cfg,
                                       const SamplerConfig& sc, Rng& rng) {
    if (pi.pi.size() != sigma.n()) throw std::invalid_argument("ebl_posterior: dimension mismatch");
    if (order.n() != static_cast<int>(sigma.n()))
        throw std::invalid_argument("ebl_posterior: order dimension mismatch");

    const core_model::PickMatrix pick = core_model::pick_matrix_from_order(order);
    const Eigen::MatrixXd& p = pick.matrix();
    const Eigen::MatrixXd m = p * sigma.matrix() * p.transpose();
    const Eigen::VectorXd view_mean = p * pi.pi;

    ViewDistribution dist(view_mean, (cfg.tau + cfg.c) * m);  // throws if P Sigma P' degenerate

    auto [trunc_mean, trunc_se] =
        truncated_mvn_mean(dist, sc.n_samples, sc.burn_in, rng, sc.batches, sc.warm_start_tries);

    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("ebl_posterior: P Sigma P' is singular");

    const double shrink = cfg.tau / (cfg.tau + cfg.c);
    const Eigen::VectorXd z = llt.solve(trunc_mean - view_mean);
    const Eigen::VectorXd mu = pi.pi + shrink * (sigma.matrix() * (p.transpose() * z));

    // Linear error propagation through A = shrink * Sigma P' M^{-1}.
    const Eigen::MatrixXd a_t = llt.solve(p * sigma.matrix());  // A' / shrink
    Eigen::VectorXd se(pi.pi.size());
    for (Eigen::Index i = 0; i < se.size(); ++i) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < a_t.rows(); ++j) {
            const double aij = shrink * a_t(j, i);
            acc += aij * aij * trunc_se[j] * trunc_se[j];
        }
        se[i] = std::sqrt(acc);
    }

    const std::int64_t effective = (sc.n_samples / sc.batches) * sc.batches;
    return PosteriorEstimate(mu, se, effective);
}

/**
 * One posterior return vector per profile order, sharing Sigma and delta.
 * Chain k draws from its own derived stream derive_seed(master_seed, k), so
 * views can be estimated in any order (or in parallel) with identical
 * results.
 */
inline solvers::ScenarioSet scenario_returns(const PriorVector& pi, const CovarianceMatrix& sigma,
                                             const aggregation::OrderProfile& profile,
                                             const ModelConfig& cfg, const SamplerConfig& sc,
                                             std::uint64_t master_seed) {
    std::vector<Eigen::VectorXd> mus;
    mus.reserve(static_cast<std::size_t>(profile.k()));
    for (int k = 0; k < profile.k(); ++k) {
        Rng rng(derive_seed(master_seed, static_cast<std::uint64_t>(k)));
        mus.push_back(ebl_posterior(pi, sigma, profile.order(k), cfg, sc, rng).mu);
    }
    return solvers::ScenarioSet(std::move(mus), sigma, cfg.delta);
}

}  // namespace rankfolio::estimator
