#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rankfolio::core_model {

/**
 * Strict ranking of n assets by expected return.
 *
 * Internally stores rank(asset) with rank 1 = highest expected return.
 * A TotalOrder is immutable after construction and always a bijection
 * onto {1,...,n}.
 */
class TotalOrder {
public:
    /// Build from rank values: ranks[i] is the position (1-based) of asset i.
    static TotalOrder from_ranks(std::vector<int> ranks) {
        TotalOrder o(std::move(ranks));
        o.validate();
        return o;
    }

    /// Build from a list of asset indices ordered best-first.
    static TotalOrder from_assets_by_rank(const std::vector<int>& assets) {
        std::vector<int> ranks(assets.size(), 0);
        for (std::size_t pos = 0; pos < assets.size(); ++pos) {
            int a = assets[pos];
            if (a < 0 || a >= static_cast<int>(assets.size()))
                throw std::invalid_argument("TotalOrder: asset index out of range");
            if (ranks[static_cast<std::size_t>(a)] != 0)
                throw std::invalid_argument("TotalOrder: duplicate asset index");
            ranks[static_cast<std::size_t>(a)] = static_cast<int>(pos) + 1;
        }
        return TotalOrder(std::move(ranks));
    }

    static TotalOrder identity(int n) {
        std::vector<int> r(static_cast<std::size_t>(n));
        std::iota(r.begin(), r.end(), 1);
        return TotalOrder(std::move(r));
    }

    int n() const { return static_cast<int>(ranks_.size()); }

    /// Position of asset i, in 1..n (1 = best).
    int rank(int asset) const { return ranks_[static_cast<std::size_t>(asset)]; }

    const std::vector<int>& ranks() const { return ranks_; }

    /// Asset indices sorted best-first.
    std::vector<int> assets_by_rank() const {
        std::vector<int> out(ranks_.size());
        for (int a = 0; a < n(); ++a) out[static_cast<std::size_t>(ranks_[static_cast<std::size_t>(a)] - 1)] = a;
        return out;
    }

    TotalOrder reversed() const {
        std::vector<int> r(ranks_.size());
        for (int a = 0; a < n(); ++a) r[static_cast<std::size_t>(a)] = n() + 1 - ranks_[static_cast<std::size_t>(a)];
        return TotalOrder(std::move(r));
    }

    bool operator==(const TotalOrder& other) const { return ranks_ == other.ranks_; }
    bool operator!=(const TotalOrder& other) const { return !(*this == other); }

private:
    explicit TotalOrder(std::vector<int> ranks) : ranks_(std::move(ranks)) {}

    void validate() const {
        const int m = n();
        if (m < 1) throw std::invalid_argument("TotalOrder: empty ranking");
        std::vector<char> seen(static_cast<std::size_t>(m), 0);
        for (int r : ranks_) {
            if (r < 1 || r > m) throw std::invalid_argument("TotalOrder: rank out of 1..n");
            if (seen[static_cast<std::size_t>(r - 1)]++) throw std::invalid_argument("TotalOrder: rank repeated");
        }
    }

    std::vector<int> ranks_;
};

/// Panel of periodic simple returns: T periods by n assets, with labels.
struct ReturnsPanel {
    std::vector<std::string> dates;      // T period labels
    std::vector<std::string> asset_ids;  // n asset labels, all distinct
    Eigen::MatrixXd returns;             // T x n simple returns

    ReturnsPanel(std::vector<std::string> dates_, std::vector<std::string> ids_, Eigen::MatrixXd rets_)
        : dates(std::move(dates_)), asset_ids(std::move(ids_)), returns(std::move(rets_)) {
        if (returns.rows() < 2) throw std::invalid_argument("ReturnsPanel: need at least 2 periods");
        if (static_cast<Eigen::Index>(dates.size()) != returns.rows())
            throw std::invalid_argument("ReturnsPanel: date count does not match rows");
        if (static_cast<Eigen::Index>(asset_ids.size()) != returns.cols())
            throw std::invalid_argument("ReturnsPanel: id count does not match columns");
        for (std::size_t i = 0; i < asset_ids.size(); ++i)
            for (std::size_t j = i + 1; j < asset_ids.size(); ++j)
                if (asset_ids[i] == asset_ids[j])
                    throw std::invalid_argument("ReturnsPanel: duplicate asset id '" + asset_ids[i] + "'");
        for (Eigen::Index t = 0; t < returns.rows(); ++t)
            for (Eigen::Index j = 0; j < returns.cols(); ++j) {
                const double r = returns(t, j);
                if (!std::isfinite(r)) throw std::invalid_argument("ReturnsPanel: non-finite return");
                if (r <= -1.0) throw std::invalid_argument("ReturnsPanel: simple return <= -100%");
            }
    }

    Eigen::Index periods() const { return returns.rows(); }
    Eigen::Index assets() const { return returns.cols(); }
};

namespace detail {

/// Strict positive definiteness witness: the Cholesky factorization must
/// succeed with pivots meaningfully above rounding noise (Eigen's LLT lets
/// an exactly singular PSD matrix through with dust-sized pivots).
inline bool cholesky_strictly_pd(const Eigen::MatrixXd& m) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) return false;
    const Eigen::VectorXd diag = llt.matrixLLT().diagonal();
    if (!diag.allFinite() || diag.minCoeff() <= 0.0) return false;
    const double scale = m.diagonal().maxCoeff();
    const double min_pivot_sq = diag.minCoeff() * diag.minCoeff();
    return scale > 0.0 && min_pivot_sq > 1e-14 * scale;
}

}  // namespace detail

/// Symmetric strictly positive definite covariance of asset returns.
class CovarianceMatrix {
public:
    explicit CovarianceMatrix(Eigen::MatrixXd sigma) : sigma_(std::move(sigma)) {
        if (sigma_.rows() != sigma_.cols()) throw std::invalid_argument("CovarianceMatrix: not square");
        const double scale = std::max(1.0, sigma_.cwiseAbs().maxCoeff());
        if ((sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw std::invalid_argument("CovarianceMatrix: not symmetric");
        if (!detail::cholesky_strictly_pd(sigma_))
            throw std::invalid_argument("CovarianceMatrix: not positive definite");
    }

    const Eigen::MatrixXd& matrix() const { return sigma_; }
    Eigen::Index n() const { return sigma_.rows(); }

private:
    Eigen::MatrixXd sigma_;
};

/// Prior (equilibrium) expected per-period returns.
struct PriorVector {
    Eigen::VectorXd pi;

    explicit PriorVector(Eigen::VectorXd v) : pi(std::move(v)) {
        if (!pi.allFinite()) throw std::invalid_argument("PriorVector: non-finite entry");
    }
};

/// Portfolio weights on the n-simplex (no short selling).
class Portfolio {
public:
    explicit Portfolio(Eigen::VectorXd w) : w_(std::move(w)) {
        for (Eigen::Index i = 0; i < w_.size(); ++i) {
            if (w_[i] < -1e-12) throw std::invalid_argument("Portfolio: negative weight");
            if (w_[i] < 0.0) w_[i] = 0.0;  // clamp numerical dust
        }
        if (std::fabs(w_.sum() - 1.0) > 1e-9)
            throw std::invalid_argument("Portfolio: weights do not sum to 1");
    }

    static Portfolio equal_weights(Eigen::Index n) {
        return Portfolio(Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
    }

    const Eigen::VectorXd& weights() const { return w_; }
    Eigen::Index n() const { return w_.size(); }

private:
    Eigen::VectorXd w_;
};

/**
 * Model parameters shared across the pipeline.
 *
 * delta: risk aversion (> 0).
 * c:     overall confidence level in the views (> 0; smaller = more trust).
 * tau:   prior uncertainty scale (> 0).
 *
 * The experiment protocol couples tau = 1 - c, which additionally requires
 * c in (0,1); use protocol() for that. The general model accepts any c > 0.
 */
struct ModelConfig {
    double delta;
    double c;
    double tau;

    ModelConfig(double delta_, double c_, double tau_) : delta(delta_), c(c_), tau(tau_) {
        if (!(delta > 0.0)) throw std::invalid_argument("ModelConfig: delta must be > 0");
        if (!(c > 0.0)) throw std::invalid_argument("ModelConfig: c must be > 0");
        if (!(tau > 0.0)) throw std::invalid_argument("ModelConfig: tau must be > 0");
    }

    /// Coupled configuration tau = 1 - c with c in (0,1).
    static ModelConfig protocol(double delta_, double c_) {
        if (!(c_ > 0.0 && c_ < 1.0))
            throw std::invalid_argument("ModelConfig::protocol: c must be in (0,1)");
        return ModelConfig(delta_, c_, 1.0 - c_);
    }
};

/// Sign matrix with one row per adjacent pair of the ranking; row j states
/// that the asset ranked j outperforms the asset ranked j+1.
class PickMatrix {
public:
    explicit PickMatrix(Eigen::MatrixXd p) : p_(std::move(p)) {
        if (p_.rows() + 1 != p_.cols())
            throw std::invalid_argument("PickMatrix: expected (n-1) x n shape");
        for (Eigen::Index r = 0; r < p_.rows(); ++r) {
            int plus = 0, minus = 0;
            for (Eigen::Index c = 0; c < p_.cols(); ++c) {
                const double v = p_(r, c);
                if (v == 1.0) ++plus;
                else if (v == -1.0) ++minus;
                else if (v != 0.0) throw std::invalid_argument("PickMatrix: entries must be -1, 0, +1");
            }
            if (plus != 1 || minus != 1)
                throw std::invalid_argument("PickMatrix: each row needs exactly one +1 and one -1");
        }
    }

    const Eigen::MatrixXd& matrix() const { return p_; }
    Eigen::Index rows() const { return p_.rows(); }

private:
    Eigen::MatrixXd p_;
};

/**
 * Sample covariance of the panel columns (denominator T-1), repaired to
 * strict positive definiteness if needed.
 *
 * Repair walks a deterministic jitter ladder: jitter, jitter*100, ... times
 * the mean diagonal is added to the diagonal until a Cholesky factorization
 * succeeds. Eigenvectors are preserved.
 */
inline CovarianceMatrix estimate_covariance(const ReturnsPanel& panel, double jitter = 1e-10) {
    if (panel.periods() < 2) throw std::invalid_argument("estimate_covariance: need T >= 2");
    if (!(jitter > 0.0)) throw std::invalid_argument("estimate_covariance: jitter must be > 0");

    const Eigen::Index t = panel.periods();
    Eigen::MatrixXd centered = panel.returns.rowwise() - panel.returns.colwise().mean();
    Eigen::MatrixXd s = (centered.transpose() * centered) / static_cast<double>(t - 1);
    s = 0.5 * (s + s.transpose());  // kill asymmetry from rounding

    const double base_diag = s.diagonal().mean();
    const double scale = base_diag > 0.0 ? base_diag : 1.0;
    double mult = jitter;
    for (int attempt = 0; attempt < 12; ++attempt) {
        if (detail::cholesky_strictly_pd(s)) return CovarianceMatrix(s);
        s.diagonal().array() += mult * scale;
        mult *= 100.0;
    }
    throw std::runtime_error("estimate_covariance: repair ladder exhausted");
}

/// Implied equilibrium excess returns pi = delta * Sigma * w_ref.
inline PriorVector reverse_optimize_prior(const CovarianceMatrix& sigma, const Portfolio& w_ref,
                                          double delta) {
    if (sigma.n() != w_ref.n())
        throw std::invalid_argument("reverse_optimize_prior: dimension mismatch");
    return PriorVector(delta * (sigma.matrix() * w_ref.weights()));
}

/// Adjacent-pair chain encoding of a total order: n-1 rows, row j has +1 at
/// the asset ranked j and -1 at the asset ranked j+1. The rows jointly imply
/// the full order and P Sigma P' stays invertible for SPD Sigma.
inline PickMatrix pick_matrix_from_order(const TotalOrder& order) {
    const int n = order.n();
    if (n < 2) throw std::invalid_argument("pick_matrix_from_order: no view expressible for n < 2");
    const std::vector<int> chain = order.assets_by_rank();
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n - 1, n);
    for (int j = 0; j < n - 1; ++j) {
        p(j, chain[static_cast<std::size_t>(j)]) = 1.0;
        p(j, chain[static_cast<std::size_t>(j + 1)]) = -1.0;
    }
    return PickMatrix(std::move(p));
}

}  // namespace rankfolio::core_model
