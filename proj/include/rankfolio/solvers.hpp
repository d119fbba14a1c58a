#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rankfolio/core_model.hpp"

namespace rankfolio::solvers {

using core_model::CovarianceMatrix;
using core_model::Portfolio;

/// Discrete uncertainty set: K posterior return vectors sharing one
/// covariance and risk aversion.
struct ScenarioSet {
    std::vector<Eigen::VectorXd> mus;
    CovarianceMatrix sigma;
    double delta;

    ScenarioSet(std::vector<Eigen::VectorXd> mus_, CovarianceMatrix sigma_, double delta_)
        : mus(std::move(mus_)), sigma(std::move(sigma_)), delta(delta_) {
        if (mus.empty()) throw std::invalid_argument("ScenarioSet: need K >= 1 scenarios");
        if (!(delta > 0.0)) throw std::invalid_argument("ScenarioSet: delta must be > 0");
        for (const auto& m : mus)
            if (m.size() != sigma.n()) throw std::invalid_argument("ScenarioSet: scenario dimension mismatch");
    }

    int k() const { return static_cast<int>(mus.size()); }
    Eigen::Index n() const { return sigma.n(); }
};

struct SolveReport {
    Portfolio w;
    double objective;
    double kkt_residual;
    int iterations;
    std::vector<int> active_scenarios;
};

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown by solve_soft when the subset enumeration space exceeds the budget.
class SubsetBudgetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

/// Risk-adjusted return f(w, mu) = mu'w - (delta/2) w'Sigma'w.
inline double objective_value(const Eigen::VectorXd& w, const Eigen::VectorXd& mu,
                              const Eigen::MatrixXd& sigma, double delta) {
    return mu.dot(w) - 0.5 * delta * w.dot(sigma * w);
}

struct EpigraphSolution {
    Eigen::VectorXd w;
    double y = 0.0;
    double kkt_residual = 0.0;
    int iterations = 0;
    std::vector<int> active;            // scenarios tight at the solution
    std::vector<double> multipliers;    // lambda_k, zero when inactive
};

/**
 * Primal active-set solver for the epigraph quadratic program
 *
 *   max  y - (delta/2) w' Sigma w
 *   s.t. y <= mu_k' w - g_k           (k = 1..K)
 *        sum_i w_i = 1,  w >= 0.
 *
 * The working set holds one or more tight scenario constraints plus a set
 * of zeroed weights; each subproblem is an equality-constrained QP solved
 * through its KKT system. At least one scenario constraint is always tight
 * (its multiplier sums to one), so every subproblem is strictly convex on
 * the constraint manifold.
 */
class EpigraphQp {
public:
    EpigraphQp(const Eigen::MatrixXd& sigma, double delta, const std::vector<Eigen::VectorXd>& mus,
               const Eigen::VectorXd& shifts, double tol)
        : sigma_(sigma), delta_(delta), mus_(mus), shifts_(shifts), tol_(tol),
          n_(static_cast<int>(sigma.rows())), k_(static_cast<int>(mus.size())) {
        if (shifts_.size() != k_) throw std::invalid_argument("EpigraphQp: shifts size mismatch");
    }

    EpigraphSolution solve(const Eigen::VectorXd* warm_start = nullptr) const {
        Eigen::VectorXd w = (warm_start && warm_start->size() == n_)
                                ? *warm_start
                                : Eigen::VectorXd::Constant(n_, 1.0 / n_);
        for (int i = 0; i < n_; ++i) w[i] = std::max(w[i], 0.0);
        w /= w.sum();

        std::vector<char> at_bound(static_cast<std::size_t>(n_), 0);
        for (int i = 0; i < n_; ++i) at_bound[static_cast<std::size_t>(i)] = (w[i] <= 0.0);

        double y = slack_min(w);
        std::vector<int> active{argmin_slack(w)};

        const int max_iter = 100 * (n_ + k_ + 2);
        EpigraphSolution sol;
        for (int iter = 0; iter < max_iter; ++iter) {
            Eigen::VectorXd w_eq, eta, s_bound;
            double nu = 0.0;
            if (!solve_eqp(active, at_bound, w_eq, eta, nu, s_bound)) {
                // Singular subproblem: drop the newest working-set element and retry.
                if (active.size() > 1) {
                    active.pop_back();
                } else {
                    int last = -1;
                    for (int i = 0; i < n_; ++i)
                        if (at_bound[static_cast<std::size_t>(i)]) last = i;
                    if (last < 0) throw SolverError("EpigraphQp: singular KKT system");
                    at_bound[static_cast<std::size_t>(last)] = 0;
                }
                continue;
            }
            const double y_eq = mus_[static_cast<std::size_t>(active.front())].dot(w_eq) -
                                shifts_[active.front()];

            const Eigen::VectorXd pw = w_eq - w;
            const double py = y_eq - y;
            const double step_scale = pw.cwiseAbs().maxCoeff() + std::fabs(py);
            bool at_optimum = step_scale <= 3e-12 * (1.0 + w.cwiseAbs().maxCoeff() + std::fabs(y));

            if (!at_optimum) {
                // Step toward the subproblem optimum until a constraint
                // blocks. Constraints whose worst-case violation over the
                // whole step stays below the feasibility budget do not
                // block; the budget never accumulates (the filter bounds
                // the post-step slack itself) and sits three orders below
                // the KKT tolerance.
                const double feas_eps = 1e-11 * (1.0 + std::fabs(y));
                double alpha = 1.0;
                int block_scenario = -1, block_bound = -1;
                for (int k = 0; k < k_; ++k) {
                    if (std::find(active.begin(), active.end(), k) != active.end()) continue;
                    const double ds = mus_[static_cast<std::size_t>(k)].dot(pw) - py;
                    if (ds >= -1e-14) continue;
                    const double slack = mus_[static_cast<std::size_t>(k)].dot(w) - y - shifts_[k];
                    if (slack + ds >= -feas_eps) continue;
                    const double a = std::max(0.0, slack) / (-ds);
                    if (a < alpha - 1e-15) {
                        alpha = a;
                        block_scenario = k;
                        block_bound = -1;
                    }
                }
                for (int i = 0; i < n_; ++i) {
                    if (at_bound[static_cast<std::size_t>(i)]) continue;
                    if (pw[i] >= -1e-14) continue;
                    if (w[i] + pw[i] >= -1e-11) continue;
                    const double a = std::max(0.0, w[i]) / (-pw[i]);
                    if (a < alpha - 1e-15) {
                        alpha = a;
                        block_scenario = -1;
                        block_bound = i;
                    }
                }

                // A blocked zero-length step whose direction would not even
                // improve the objective is rounding noise from a degenerate
                // vertex; run the multiplier test at the current point
                // instead of collecting the grazing constraint.
                const double obj_cur = y - 0.5 * delta_ * w.dot(sigma_ * w);
                const double obj_eq = y_eq - 0.5 * delta_ * w_eq.dot(sigma_ * w_eq);
                const bool noise_direction =
                    alpha <= 1e-12 && obj_eq - obj_cur <= 1e-12 * (1.0 + std::fabs(obj_cur));
                if (!noise_direction) {
                    w += alpha * pw;
                    y += alpha * py;
                    if (block_scenario >= 0) {
                        active.push_back(block_scenario);
                    } else if (block_bound >= 0) {
                        w[block_bound] = 0.0;
                        at_bound[static_cast<std::size_t>(block_bound)] = 1;
                    }
                    // alpha == 1 with no blocker loops back and passes the
                    // stationarity test on the next iteration.
                    continue;
                }
            }

            // At the subproblem optimum, or pinned at a degenerate vertex:
            // check multiplier signs.
            std::vector<double> lambda(static_cast<std::size_t>(k_), 0.0);
            double lam_anchor = 1.0;
            for (std::size_t a = 1; a < active.size(); ++a) {
                lambda[static_cast<std::size_t>(active[a])] = eta[static_cast<Eigen::Index>(a - 1)];
                lam_anchor -= eta[static_cast<Eigen::Index>(a - 1)];
            }
            lambda[static_cast<std::size_t>(active.front())] = lam_anchor;

            double worst = -1e-11;
            int drop_scenario = -1, drop_bound = -1;
            for (std::size_t a = 0; a < active.size(); ++a) {
                const double l = lambda[static_cast<std::size_t>(active[a])];
                if (l < worst && active.size() > 1) {
                    worst = l;
                    drop_scenario = active[a];
                    drop_bound = -1;
                }
            }
            int bi = 0;
            for (int i = 0; i < n_; ++i) {
                if (!at_bound[static_cast<std::size_t>(i)]) continue;
                const double s = s_bound[bi++];
                if (s < worst) {
                    worst = s;
                    drop_scenario = -1;
                    drop_bound = i;
                }
            }
            if (drop_scenario < 0 && drop_bound < 0) {
                if (at_optimum) {
                    sol.w = w_eq;
                    sol.y = y_eq;
                } else {
                    sol.w = w;
                    sol.y = y;
                }
                sol.iterations = iter + 1;
                finalize(sol, active, at_bound, lambda, nu, s_bound);
                return sol;
            }
            if (drop_scenario >= 0) {
                active.erase(std::find(active.begin(), active.end(), drop_scenario));
            } else {
                at_bound[static_cast<std::size_t>(drop_bound)] = 0;
            }
            if (at_optimum) {
                w = w_eq;
                y = y_eq;
            }
        }
        throw SolverError("EpigraphQp: iteration cap exceeded");
    }

private:
    double slack_min(const Eigen::VectorXd& w) const {
        double best = std::numeric_limits<double>::infinity();
        for (int k = 0; k < k_; ++k)
            best = std::min(best, mus_[static_cast<std::size_t>(k)].dot(w) - shifts_[k]);
        return best;
    }

    int argmin_slack(const Eigen::VectorXd& w) const {
        int arg = 0;
        double best = std::numeric_limits<double>::infinity();
        for (int k = 0; k < k_; ++k) {
            const double s = mus_[static_cast<std::size_t>(k)].dot(w) - shifts_[k];
            if (s < best) {
                best = s;
                arg = k;
            }
        }
        return arg;
    }

    /// Equality-constrained subproblem with the scenario anchor eliminated:
    /// y is substituted by mu_a'w - g_a, leaving a strictly convex QP in w.
    /// Constraint rows are equilibrated to unit norm; near-identical
    /// scenarios otherwise mix row scales of 1e-4 and 1 in one system and
    /// the solved direction at a degenerate vertex comes out as noise.
    bool solve_eqp(const std::vector<int>& active, const std::vector<char>& at_bound,
                   Eigen::VectorXd& w_out, Eigen::VectorXd& eta_out, double& nu_out,
                   Eigen::VectorXd& s_out) const {
        const int a = active.front();
        const int n_eta = static_cast<int>(active.size()) - 1;
        std::vector<int> bound_idx;
        for (int i = 0; i < n_; ++i)
            if (at_bound[static_cast<std::size_t>(i)]) bound_idx.push_back(i);
        const int nz = static_cast<int>(bound_idx.size());
        const int dim = n_ + n_eta + 1 + nz;

        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(dim, dim);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
        Eigen::VectorXd row_scale = Eigen::VectorXd::Ones(dim);

        kkt.topLeftCorner(n_, n_) = delta_ * sigma_;
        rhs.head(n_) = mus_[static_cast<std::size_t>(a)];

        int row = n_;
        for (int e = 0; e < n_eta; ++e, ++row) {
            const int k = active[static_cast<std::size_t>(e + 1)];
            const Eigen::VectorXd diff = mus_[static_cast<std::size_t>(k)] - mus_[static_cast<std::size_t>(a)];
            const double norm = diff.cwiseAbs().maxCoeff();
            if (norm <= 0.0) return false;  // duplicate scenario in the working set
            const double s = 1.0 / norm;
            row_scale[row] = s;
            kkt.block(row, 0, 1, n_) = s * diff.transpose();
            kkt.block(0, row, n_, 1) = -s * diff;
            rhs[row] = s * (shifts_[k] - shifts_[a]);
        }
        kkt.block(row, 0, 1, n_).setOnes();
        kkt.block(0, row, n_, 1).setConstant(-1.0);
        rhs[row] = 1.0;
        ++row;
        for (int b = 0; b < nz; ++b, ++row) {
            kkt(row, bound_idx[static_cast<std::size_t>(b)]) = 1.0;
            kkt(bound_idx[static_cast<std::size_t>(b)], row) = -1.0;
        }

        // Fast path first; fall back to full pivoting when the residual
        // betrays near-singularity.
        Eigen::VectorXd x = Eigen::PartialPivLU<Eigen::MatrixXd>(kkt).solve(rhs);
        const double scale = 1.0 + rhs.cwiseAbs().maxCoeff();
        if (!x.allFinite() || (kkt * x - rhs).cwiseAbs().maxCoeff() > 1e-10 * scale) {
            Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
            if (!lu.isInvertible()) return false;
            x = lu.solve(rhs);
            if (!x.allFinite() || (kkt * x - rhs).cwiseAbs().maxCoeff() > 1e-8 * scale) return false;
        }
        // A meaningful target lives on the simplex scale.
        if (x.head(n_).cwiseAbs().maxCoeff() > 1e6) return false;

        w_out = x.head(n_);
        eta_out.resize(n_eta);
        for (int e = 0; e < n_eta; ++e)
            eta_out[e] = x[n_ + e] * row_scale[n_ + e];  // undo the equilibration
        nu_out = x[n_ + n_eta];
        s_out = x.tail(nz);
        return true;
    }

    void finalize(EpigraphSolution& sol, const std::vector<int>& active,
                  const std::vector<char>& at_bound, const std::vector<double>& lambda, double nu,
                  const Eigen::VectorXd& s_bound) const {
        sol.multipliers = lambda;

        Eigen::VectorXd s = Eigen::VectorXd::Zero(n_);
        int bi = 0;
        for (int i = 0; i < n_; ++i)
            if (at_bound[static_cast<std::size_t>(i)]) s[i] = s_bound[bi++];

        Eigen::VectorXd grad = delta_ * (sigma_ * sol.w);
        for (int k = 0; k < k_; ++k)
            grad -= lambda[static_cast<std::size_t>(k)] * mus_[static_cast<std::size_t>(k)];
        grad.array() -= nu;
        grad -= s;

        double res = grad.cwiseAbs().maxCoeff();
        res = std::max(res, std::fabs(sol.w.sum() - 1.0));
        res = std::max(res, std::max(0.0, -sol.w.minCoeff()));
        double lam_sum = 0.0;
        for (int k = 0; k < k_; ++k) {
            const double slack = mus_[static_cast<std::size_t>(k)].dot(sol.w) - sol.y - shifts_[k];
            res = std::max(res, std::max(0.0, -slack));
            res = std::max(res, std::fabs(lambda[static_cast<std::size_t>(k)] * slack));
            res = std::max(res, -std::min(0.0, lambda[static_cast<std::size_t>(k)]));
            lam_sum += lambda[static_cast<std::size_t>(k)];
        }
        res = std::max(res, std::fabs(lam_sum - 1.0));
        for (int i = 0; i < n_; ++i) {
            res = std::max(res, -std::min(0.0, s[i]));
            res = std::max(res, std::fabs(s[i] * sol.w[i]));
        }
        sol.kkt_residual = res;

        const double act_tol = 1e-7 * (1.0 + std::fabs(sol.y));
        sol.active.clear();
        for (int k = 0; k < k_; ++k) {
            const double slack = mus_[static_cast<std::size_t>(k)].dot(sol.w) - sol.y - shifts_[k];
            if (slack <= act_tol) sol.active.push_back(k);
        }
    }

    const Eigen::MatrixXd& sigma_;
    double delta_;
    const std::vector<Eigen::VectorXd>& mus_;
    Eigen::VectorXd shifts_;
    double tol_;
    int n_;
    int k_;
};

inline EpigraphSolution solve_epigraph(const Eigen::MatrixXd& sigma, double delta,
                                       const std::vector<Eigen::VectorXd>& mus,
                                       const Eigen::VectorXd& shifts, double tol,
                                       const Eigen::VectorXd* warm_start = nullptr) {
    EpigraphQp qp(sigma, delta, mus, shifts, tol);
    EpigraphSolution sol = qp.solve(warm_start);
    if (sol.kkt_residual > tol)
        throw SolverError("solver returned KKT residual " + std::to_string(sol.kkt_residual) +
                          " above tolerance");
    return sol;
}

inline Portfolio make_portfolio(const Eigen::VectorXd& w) {
    Eigen::VectorXd v = w;
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = std::max(v[i], 0.0);
    v /= v.sum();
    return Portfolio(v);
}

}  // namespace detail

/**
 * Classical mean-variance optimum: maximizes mu'w - (delta/2) w'Sigma'w over
 * the simplex. Strict concavity gives a unique maximizer; the returned
 * report carries the exact KKT residual.
 */
inline SolveReport solve_mvo(const Eigen::VectorXd& mu, const CovarianceMatrix& sigma, double delta,
                             double tol = 1e-8, const Eigen::VectorXd* warm_start = nullptr) {
    if (mu.size() != sigma.n()) throw std::invalid_argument("solve_mvo: dimension mismatch");
    if (!(delta > 0.0)) throw std::invalid_argument("solve_mvo: delta must be > 0");
    std::vector<Eigen::VectorXd> mus{mu};
    Eigen::VectorXd shifts = Eigen::VectorXd::Zero(1);
    auto sol = detail::solve_epigraph(sigma.matrix(), delta, mus, shifts, tol, warm_start);
    const double obj = detail::objective_value(sol.w, mu, sigma.matrix(), delta);
    return SolveReport{detail::make_portfolio(sol.w), obj, sol.kkt_residual, sol.iterations, {}};
}

/// Max-min robustness: maximizes the worst risk-adjusted return over the
/// scenario set. active_scenarios reports the argmin set at the optimum.
inline SolveReport solve_maxmin(const ScenarioSet& scen, double tol = 1e-8,
                                const Eigen::VectorXd* warm_start = nullptr) {
    Eigen::VectorXd shifts = Eigen::VectorXd::Zero(scen.k());
    auto sol = detail::solve_epigraph(scen.sigma.matrix(), scen.delta, scen.mus, shifts, tol, warm_start);
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& mu : scen.mus)
        worst = std::min(worst, detail::objective_value(sol.w, mu, scen.sigma.matrix(), scen.delta));
    return SolveReport{detail::make_portfolio(sol.w), worst, sol.kkt_residual, sol.iterations,
                       sol.active};
}

/**
 * Min-max regret robustness. First solves the K per-scenario optima f_k,
 * then maximizes y - (delta/2) w'Sigma'w subject to y <= mu_k'w - f_k.
 * The reported objective is the minimized maximum regret (always >= 0).
 */
inline SolveReport solve_min_regret(const ScenarioSet& scen, double tol = 1e-8) {
    const int k = scen.k();
    Eigen::VectorXd f(k);
    int iterations = 0;
    for (int i = 0; i < k; ++i) {
        const SolveReport r = solve_mvo(scen.mus[static_cast<std::size_t>(i)], scen.sigma, scen.delta, tol);
        f[i] = r.objective;
        iterations += r.iterations;
    }
    auto sol = detail::solve_epigraph(scen.sigma.matrix(), scen.delta, scen.mus, f, tol);
    iterations += sol.iterations;
    double max_regret = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < k; ++i) {
        const double fi = detail::objective_value(sol.w, scen.mus[static_cast<std::size_t>(i)],
                                                  scen.sigma.matrix(), scen.delta);
        max_regret = std::max(max_regret, f[i] - fi);
    }
    max_regret = std::max(max_regret, 0.0);
    return SolveReport{detail::make_portfolio(sol.w), max_regret, sol.kkt_residual, iterations,
                       sol.active};
}

namespace detail {

/// Fixed-capacity bitset over scenario indices.
struct ScenarioMask {
    std::vector<std::uint64_t> words;

    explicit ScenarioMask(int k) : words(static_cast<std::size_t>((k + 63) / 64), 0) {}

    void set(int i) { words[static_cast<std::size_t>(i / 64)] |= (std::uint64_t{1} << (i % 64)); }
    void clear(int i) { words[static_cast<std::size_t>(i / 64)] &= ~(std::uint64_t{1} << (i % 64)); }

    bool contains_all_of(const ScenarioMask& sub) const {
        for (std::size_t w = 0; w < words.size(); ++w)
            if (sub.words[w] & ~words[w]) return false;
        return true;
    }
};

}  // namespace detail

/**
 * Soft (quantile) robustness: maximizes the ceil(gamma*K)-th largest of the
 * per-scenario risk-adjusted returns. Solved exactly by enumerating subsets
 * S of size ceil(gamma*K) and taking the best max-min restricted to S.
 *
 * Three devices keep the enumeration exact but far below the nominal
 * C(K, m) work:
 *   - scenarios are visited in decreasing order of their single-scenario
 *     optima f_k, and any branch whose next pick satisfies f_k <= incumbent
 *     is cut (the subset's max-min cannot beat the incumbent);
 *   - each solved subset is cached by its active core: a later subset that
 *     contains the core and whose members all clear the core's objective
 *     has, provably, the same optimum and is not re-solved;
 *   - when a cached core lies inside the current enumeration prefix and
 *     every still-selectable scenario clears its objective, the entire
 *     subtree evaluates to that objective and is folded in one step.
 */
inline SolveReport solve_soft(const ScenarioSet& scen, double gamma, double tol = 1e-8,
                              std::uint64_t subset_budget = 2000000) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("solve_soft: gamma must be in (0,1]");
    const int k = scen.k();
    const int m = static_cast<int>(std::ceil(gamma * k - 1e-9));

    // Enumeration space guard.
    {
        double binom = 1.0;
        for (int i = 0; i < m; ++i) binom = binom * (k - i) / (i + 1);
        if (binom > static_cast<double>(subset_budget))
            throw SubsetBudgetError("solve_soft: C(" + std::to_string(k) + "," + std::to_string(m) +
                                    ") subsets exceed the budget; use a smaller K or a coarser gamma");
    }

    // Per-scenario optima; also the source of the prune bound.
    Eigen::VectorXd f(k);
    std::vector<Eigen::VectorXd> w_single(static_cast<std::size_t>(k));
    int iterations = 0;
    for (int i = 0; i < k; ++i) {
        const SolveReport r = solve_mvo(scen.mus[static_cast<std::size_t>(i)], scen.sigma, scen.delta, tol);
        f[i] = r.objective;
        w_single[static_cast<std::size_t>(i)] = r.w.weights();
        iterations += r.iterations;
    }

    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (f[a] != f[b]) return f[a] > f[b];
        return a < b;
    });

    struct CoreEntry {
        detail::ScenarioMask core_mask{0};
        std::vector<int> core;        // global scenario indices, sorted
        Eigen::VectorXd fvals;        // f(w, mu_k) for all k at the core solution
        std::vector<double> suffmin;  // min of fvals over sorted positions >= p
        double threshold;             // objective minus the reuse tolerance
        double objective;
        Eigen::VectorXd w;
        double kkt;
    };
    std::vector<CoreEntry> cache;
    std::size_t cache_next = 0;
    const std::size_t cache_cap = 64;

    double best = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_w;
    double best_kkt = 0.0;
    std::vector<int> best_active;
    bool have_best = false;

    Eigen::VectorXd warm = w_single[static_cast<std::size_t>(order[0])];
    const double reuse_tol = 1e-12;

    detail::ScenarioMask chosen_mask(k);
    std::vector<int> chosen_global;
    chosen_global.reserve(static_cast<std::size_t>(m));

    auto take_entry = [&](const CoreEntry& e) {
        if (e.objective > best) {
            best = e.objective;
            best_w = e.w;
            best_kkt = e.kkt;
            best_active = e.core;
            have_best = true;
        }
    };

    // Covers the scenarios chosen so far, i.e. min of fvals over the prefix
    // clears the entry's objective.
    auto covers_prefix = [&](const CoreEntry& e) {
        for (int g : chosen_global)
            if (e.fvals[g] < e.threshold) return false;
        return true;
    };

    // Solves max-min over the current prefix and caches the result; the
    // returned objective doubles as an upper bound for every superset.
    auto solve_prefix = [&]() -> double {
        std::vector<Eigen::VectorXd> mus;
        mus.reserve(chosen_global.size());
        for (int g : chosen_global) mus.push_back(scen.mus[static_cast<std::size_t>(g)]);
        Eigen::VectorXd shifts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mus.size()));
        auto sol = detail::solve_epigraph(scen.sigma.matrix(), scen.delta, mus, shifts, tol, &warm);
        iterations += sol.iterations;
        warm = sol.w;

        double obj = std::numeric_limits<double>::infinity();
        for (const auto& mu : mus)
            obj = std::min(obj, detail::objective_value(sol.w, mu, scen.sigma.matrix(), scen.delta));

        CoreEntry entry;
        entry.core_mask = detail::ScenarioMask(k);
        for (int local : sol.active) {
            const int g = chosen_global[static_cast<std::size_t>(local)];
            entry.core.push_back(g);
            entry.core_mask.set(g);
        }
        std::sort(entry.core.begin(), entry.core.end());
        entry.fvals.resize(k);
        for (int g = 0; g < k; ++g)
            entry.fvals[g] = detail::objective_value(sol.w, scen.mus[static_cast<std::size_t>(g)],
                                                     scen.sigma.matrix(), scen.delta);
        entry.suffmin.assign(static_cast<std::size_t>(k) + 1, std::numeric_limits<double>::infinity());
        for (int p = k - 1; p >= 0; --p)
            entry.suffmin[static_cast<std::size_t>(p)] =
                std::min(entry.suffmin[static_cast<std::size_t>(p + 1)],
                         entry.fvals[order[static_cast<std::size_t>(p)]]);
        entry.objective = obj;
        entry.threshold = obj - reuse_tol * (1.0 + std::fabs(obj));
        entry.w = sol.w;
        entry.kkt = sol.kkt_residual;

        if (static_cast<int>(chosen_global.size()) == m) take_entry(entry);
        if (cache.size() < cache_cap) {
            cache.push_back(std::move(entry));
        } else {
            cache[cache_next] = std::move(entry);
            cache_next = (cache_next + 1) % cache_cap;
        }
        return obj;
    };

    auto dfs = [&](auto&& self, int start, int need) -> void {
        // Reuse and folding from the core cache. An entry whose core lies
        // inside the prefix and whose objective is cleared by the prefix
        // values the prefix problem exactly; if every still-selectable
        // scenario clears it too, all leaves below equal that objective.
        double cached_bound = std::numeric_limits<double>::quiet_NaN();
        for (const CoreEntry& e : cache) {
            if (!chosen_mask.contains_all_of(e.core_mask)) continue;
            if (!covers_prefix(e)) continue;
            if (need == 0 || e.suffmin[static_cast<std::size_t>(start)] >= e.threshold) {
                take_entry(e);
                return;
            }
            cached_bound = e.objective;  // exact value of max-min over the prefix
            break;
        }
        if (need == 0) {
            solve_prefix();
            return;
        }
        // Branch-and-bound step: the prefix max-min bounds every completion.
        if (chosen_global.size() >= 2) {
            const double bound = std::isnan(cached_bound) ? solve_prefix() : cached_bound;
            if (have_best && bound <= best) return;
        }
        for (int pos = start; pos <= k - need; ++pos) {
            const int g = order[static_cast<std::size_t>(pos)];
            // Every member of a candidate subset must individually beat the
            // incumbent, else the subset's max-min cannot.
            if (have_best && f[g] <= best) break;
            chosen_mask.set(g);
            chosen_global.push_back(g);
            self(self, pos + 1, need - 1);
            chosen_global.pop_back();
            chosen_mask.clear(g);
        }
    };
    dfs(dfs, 0, m);

    if (!have_best) {
        // Incumbent pruning can only trigger after a first solve, so this
        // would mean the enumeration never reached a leaf.
        throw SolverError("solve_soft: enumeration produced no candidate");
    }
    return SolveReport{detail::make_portfolio(best_w), best, best_kkt, iterations, best_active};
}

}  // namespace rankfolio::solvers
