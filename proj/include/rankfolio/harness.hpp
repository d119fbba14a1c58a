#pragma once

#include <Eigen/Dense>
#include <Eigen/QR>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "rankfolio/aggregation.hpp"
#include "rankfolio/core_model.hpp"
#include "rankfolio/estimator.hpp"
#include "rankfolio/io.hpp"
#include "rankfolio/metrics.hpp"
#include "rankfolio/ordinal.hpp"
#include "rankfolio/rng.hpp"
#include "rankfolio/solvers.hpp"

namespace rankfolio::harness {

using core_model::ReturnsPanel;
using core_model::TotalOrder;

enum class MethodId {
    MaxMin,
    MinRegret,
    Soft025,
    Soft05,
    Soft075,
    Soft1,
    Borda,
    Footrule,
    Copeland,
    BestOfK,
    Mc4,
};

inline const std::vector<MethodId>& all_methods() {
    static const std::vector<MethodId> methods{
        MethodId::MaxMin,  MethodId::MinRegret, MethodId::Soft025, MethodId::Soft05,
        MethodId::Soft075, MethodId::Soft1,     MethodId::Borda,   MethodId::Footrule,
        MethodId::Copeland, MethodId::BestOfK,  MethodId::Mc4,
    };
    return methods;
}

inline std::string method_name(MethodId m) {
    switch (m) {
        case MethodId::MaxMin: return "maxmin";
        case MethodId::MinRegret: return "minregret";
        case MethodId::Soft025: return "soft_0.25";
        case MethodId::Soft05: return "soft_0.5";
        case MethodId::Soft075: return "soft_0.75";
        case MethodId::Soft1: return "soft_1";
        case MethodId::Borda: return "borda";
        case MethodId::Footrule: return "footrule";
        case MethodId::Copeland: return "copeland";
        case MethodId::BestOfK: return "bestofk";
        case MethodId::Mc4: return "mc4";
    }
    throw std::logic_error("method_name: unknown method");
}

inline MethodId parse_method(const std::string& name) {
    for (MethodId m : all_methods())
        if (method_name(m) == name) return m;
    throw std::invalid_argument("unknown method '" + name + "'");
}

/// Robust methods estimate per view and then aggregate via a robust solve;
/// social-choice methods aggregate orders first and estimate once.
inline bool is_robust(MethodId m) {
    switch (m) {
        case MethodId::MaxMin:
        case MethodId::MinRegret:
        case MethodId::Soft025:
        case MethodId::Soft05:
        case MethodId::Soft075:
        case MethodId::Soft1: return true;
        default: return false;
    }
}

inline double soft_gamma(MethodId m) {
    switch (m) {
        case MethodId::Soft025: return 0.25;
        case MethodId::Soft05: return 0.5;
        case MethodId::Soft075: return 0.75;
        case MethodId::Soft1: return 1.0;
        default: throw std::logic_error("soft_gamma: not a soft method");
    }
}

inline std::string method_group(MethodId m) { return is_robust(m) ? "robust" : "social_choice"; }

/// The (K, d, c) lattice and shared run parameters of the horse race.
struct ExperimentGrid {
    std::vector<int> ks{5, 10, 20};
    std::vector<double> ds{0.2, 0.3, 0.4, 0.47};
    std::vector<double> cs{0.25, 0.5, 0.75, 0.95};
    std::vector<MethodId> methods = all_methods();
    std::uint64_t seed = 0;
    double delta = 3.0;
    bool resample_views_monthly = true;
    bool annualize_sr = true;
    double rf_const = 0.0;
    std::vector<double> rf_series;  // optional; length = evaluated periods
    estimator::SamplerConfig sampler;
    double solver_tol = 1e-8;

    void validate() const {
        if (ks.empty() || ds.empty() || cs.empty() || methods.empty())
            throw std::invalid_argument("ExperimentGrid: empty dimension");
        for (int k : ks)
            if (k < 1) throw std::invalid_argument("ExperimentGrid: K must be >= 1");
        for (double d : ds)
            if (!(d >= 0.0 && d <= 1.0)) throw std::invalid_argument("ExperimentGrid: d must be in [0,1]");
        for (double c : cs)
            if (!(c > 0.0 && c < 1.0))
                throw std::invalid_argument("ExperimentGrid: c must be in (0,1) for the tau = 1-c protocol");
        if (!(delta > 0.0)) throw std::invalid_argument("ExperimentGrid: delta must be > 0");
    }
};

/// Panel-wide quantities fixed for the entire horizon: the sample
/// covariance and the equilibrium prior from the reference portfolio.
struct PanelContext {
    const ReturnsPanel* panel;
    core_model::CovarianceMatrix sigma;
    core_model::PriorVector pi;
};

inline PanelContext make_panel_context(const ReturnsPanel& panel, double delta,
                                       std::optional<core_model::Portfolio> reference = std::nullopt,
                                       double jitter = 1e-10) {
    core_model::CovarianceMatrix sigma = core_model::estimate_covariance(panel, jitter);
    core_model::Portfolio w_ref =
        reference ? *reference : core_model::Portfolio::equal_weights(panel.assets());
    core_model::PriorVector pi = core_model::reverse_optimize_prior(sigma, w_ref, delta);
    return PanelContext{&panel, std::move(sigma), std::move(pi)};
}

struct CellParams {
    int k;
    double d;
    double c;
    double delta;
    double tau;  // the protocol couples tau = 1 - c
};

/// Ranking of assets by realized return in period t+1 (rank 1 = highest);
/// exact ties resolve by ascending asset index.
inline TotalOrder correct_order_at(const ReturnsPanel& panel, Eigen::Index t) {
    if (t + 1 >= panel.periods()) throw std::invalid_argument("correct_order_at: t+1 beyond panel");
    const Eigen::Index n = panel.assets();
    std::vector<int> assets(static_cast<std::size_t>(n));
    std::iota(assets.begin(), assets.end(), 0);
    std::sort(assets.begin(), assets.end(), [&](int a, int b) {
        const double ra = panel.returns(t + 1, a);
        const double rb = panel.returns(t + 1, b);
        if (ra != rb) return ra > rb;
        return a < b;
    });
    return TotalOrder::from_assets_by_rank(assets);
}

struct PeriodOutcome {
    core_model::Portfolio w;
    double realized;
};

namespace detail {

inline std::uint64_t hash_order(const TotalOrder& order) {
    std::uint64_t h = 1469598103934665603ULL;
    for (int r : order.ranks()) {
        h ^= static_cast<std::uint64_t>(r);
        h *= 1099511628211ULL;
    }
    return h;
}

inline TotalOrder aggregate_for(MethodId m, const aggregation::OrderProfile& profile) {
    switch (m) {
        case MethodId::Borda: return aggregation::borda(profile);
        case MethodId::Footrule: return aggregation::footrule_aggregate(profile);
        case MethodId::Copeland: return aggregation::copeland(profile);
        case MethodId::BestOfK: return aggregation::best_of_k(profile);
        case MethodId::Mc4: return aggregation::mc4(profile);
        default: throw std::logic_error("aggregate_for: not a social-choice method");
    }
}

}  // namespace detail

/**
 * One rebalancing step at period t: derives the correct order from the
 * returns realized in (t, t+1], samples the K views at distance d (or takes
 * the fixed views), runs every requested method on the same view set and
 * records each portfolio's realized next-period return.
 *
 * Robust methods share one scenario set (common random numbers); the
 * posterior for a consensus order is seeded by the order's content, so
 * aggregators that agree on the consensus also agree on the portfolio.
 */
inline std::map<MethodId, PeriodOutcome> run_period(
    const PanelContext& ctx, const CellParams& cell, Eigen::Index t,
    const std::vector<MethodId>& methods, const estimator::SamplerConfig& sampler,
    double solver_tol, std::uint64_t period_seed,
    const std::vector<TotalOrder>* fixed_views = nullptr,
    const ordinal::MahonianTable* mahonian = nullptr) {
    const ReturnsPanel& panel = *ctx.panel;
    const int n = static_cast<int>(panel.assets());
    const TotalOrder correct = correct_order_at(panel, t);

    std::vector<TotalOrder> views;
    if (fixed_views) {
        views = *fixed_views;
    } else {
        const ordinal::DistanceSpec spec = ordinal::DistanceSpec::from_normalized(cell.d, n);
        Rng vrng(derive_seed(period_seed, {1}));
        views.reserve(static_cast<std::size_t>(cell.k));
        if (mahonian) {
            for (int k = 0; k < cell.k; ++k)
                views.push_back(ordinal::sample_order_at_distance(correct, spec, vrng, *mahonian));
        } else {
            const ordinal::MahonianTable table = ordinal::build_mahonian(n, spec.t);
            for (int k = 0; k < cell.k; ++k)
                views.push_back(ordinal::sample_order_at_distance(correct, spec, vrng, table));
        }
    }
    const aggregation::OrderProfile profile(views);
    const core_model::ModelConfig cfg(cell.delta, cell.c, cell.tau);

    bool need_robust = false;
    for (MethodId m : methods) need_robust = need_robust || is_robust(m);

    std::optional<solvers::ScenarioSet> scen;
    if (need_robust)
        scen = estimator::scenario_returns(ctx.pi, ctx.sigma, profile, cfg, sampler,
                                           derive_seed(period_seed, {2}));

    std::map<std::vector<int>, estimator::PosteriorEstimate> consensus_cache;
    auto posterior_for = [&](const TotalOrder& order) -> const estimator::PosteriorEstimate& {
        auto it = consensus_cache.find(order.ranks());
        if (it == consensus_cache.end()) {
            Rng rng(derive_seed(period_seed, {3, detail::hash_order(order)}));
            it = consensus_cache
                     .emplace(order.ranks(), estimator::ebl_posterior(ctx.pi, ctx.sigma, order, cfg,
                                                                      sampler, rng))
                     .first;
        }
        return it->second;
    };

    const Eigen::VectorXd next = panel.returns.row(t + 1).transpose();
    std::map<MethodId, PeriodOutcome> out;
    for (MethodId m : methods) {
        solvers::SolveReport report = [&] {
            if (is_robust(m)) {
                switch (m) {
                    case MethodId::MaxMin: return solvers::solve_maxmin(*scen, solver_tol);
                    case MethodId::MinRegret: return solvers::solve_min_regret(*scen, solver_tol);
                    default: return solvers::solve_soft(*scen, soft_gamma(m), solver_tol);
                }
            }
            const TotalOrder consensus =
                aggregation::local_improvement(detail::aggregate_for(m, profile), profile);
            const estimator::PosteriorEstimate& post = posterior_for(consensus);
            return solvers::solve_mvo(post.mu, ctx.sigma, cell.delta, solver_tol);
        }();
        const double realized = report.w.weights().dot(next);
        out.emplace(m, PeriodOutcome{std::move(report.w), realized});
    }
    return out;
}

struct GridResult {
    std::vector<metrics::PerformanceRecord> records;
};

namespace detail {

inline std::vector<double> rf_for(const ExperimentGrid& grid, std::size_t periods) {
    if (!grid.rf_series.empty()) {
        if (grid.rf_series.size() != periods)
            throw std::invalid_argument("rf series length must equal the number of evaluated periods");
        return grid.rf_series;
    }
    return std::vector<double>(periods, grid.rf_const);
}

}  // namespace detail

/**
 * Runs every (K, d, c) cell of the grid over all rebalancing periods and
 * assembles per-method return series with their SR and CEQ.
 *
 * The run is a pure function of (panel, grid, seed): cell seeds derive from
 * the grid position, period seeds from the cell seed, so any thread count
 * produces identical records.
 */
inline GridResult run_grid(const ReturnsPanel& panel, const ExperimentGrid& grid, int threads = 1) {
    grid.validate();
    const PanelContext ctx = make_panel_context(panel, grid.delta);
    const Eigen::Index periods = panel.periods() - 1;
    const std::vector<double> rf = detail::rf_for(grid, static_cast<std::size_t>(periods));

    struct CellJob {
        std::size_t ik, id, ic;
    };
    std::vector<CellJob> jobs;
    for (std::size_t ik = 0; ik < grid.ks.size(); ++ik)
        for (std::size_t id = 0; id < grid.ds.size(); ++id)
            for (std::size_t ic = 0; ic < grid.cs.size(); ++ic) jobs.push_back({ik, id, ic});

    std::vector<std::vector<metrics::PerformanceRecord>> cell_records(jobs.size());

    auto run_cell = [&](std::size_t job_index) {
        const CellJob& job = jobs[job_index];
        const CellParams cell{grid.ks[job.ik], grid.ds[job.id], grid.cs[job.ic], grid.delta,
                              1.0 - grid.cs[job.ic]};
        const std::uint64_t cell_seed = derive_seed(grid.seed, {job.ik, job.id, job.ic});
        const int n = static_cast<int>(panel.assets());
        const ordinal::DistanceSpec spec = ordinal::DistanceSpec::from_normalized(cell.d, n);
        const ordinal::MahonianTable table = ordinal::build_mahonian(n, spec.t);

        std::map<MethodId, std::vector<double>> series;
        for (MethodId m : grid.methods) series[m] = {};

        if (grid.resample_views_monthly) {
            for (Eigen::Index t = 0; t < periods; ++t) {
                auto outcomes = run_period(ctx, cell, t, grid.methods, grid.sampler, grid.solver_tol,
                                           derive_seed(cell_seed, static_cast<std::uint64_t>(t)),
                                           nullptr, &table);
                for (MethodId m : grid.methods) series[m].push_back(outcomes.at(m).realized);
            }
        } else {
            // Views fixed for the horizon: sampled once against the first
            // period's correct order; portfolios are then constant and only
            // realized returns vary.
            const TotalOrder ref = correct_order_at(panel, 0);
            Rng vrng(derive_seed(cell_seed, {7, 1}));
            std::vector<TotalOrder> views;
            for (int k = 0; k < cell.k; ++k)
                views.push_back(ordinal::sample_order_at_distance(ref, spec, vrng, table));
            auto outcomes = run_period(ctx, cell, 0, grid.methods, grid.sampler, grid.solver_tol,
                                       derive_seed(cell_seed, std::uint64_t{0}), &views, &table);
            for (Eigen::Index t = 0; t < periods; ++t) {
                const Eigen::VectorXd next = panel.returns.row(t + 1).transpose();
                for (MethodId m : grid.methods)
                    series[m].push_back(outcomes.at(m).w.weights().dot(next));
            }
        }

        std::vector<metrics::PerformanceRecord> recs;
        for (MethodId m : grid.methods) {
            metrics::PerformanceRecord rec;
            rec.method = method_name(m);
            rec.k = cell.k;
            rec.d = cell.d;
            rec.c = cell.c;
            rec.monthly_returns = series[m];
            rec.sr = metrics::sharpe_ratio(rec.monthly_returns, rf, grid.annualize_sr);
            rec.ceq = metrics::ceq(rec.monthly_returns, grid.delta);
            recs.push_back(std::move(rec));
        }
        cell_records[job_index] = std::move(recs);
    };

    if (threads <= 1) {
        for (std::size_t j = 0; j < jobs.size(); ++j) run_cell(j);
    } else {
        std::atomic<std::size_t> next_job{0};
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(jobs.size());
        const int nthreads = std::min<int>(threads, static_cast<int>(jobs.size()));
        for (int w = 0; w < nthreads; ++w)
            pool.emplace_back([&] {
                while (true) {
                    const std::size_t j = next_job.fetch_add(1);
                    if (j >= jobs.size()) return;
                    try {
                        run_cell(j);
                    } catch (...) {
                        errors[j] = std::current_exception();
                    }
                }
            });
        for (auto& th : pool) th.join();
        // a failed cell aborts the whole run; first in grid order wins
        for (const auto& err : errors)
            if (err) std::rethrow_exception(err);
    }

    GridResult result;
    for (auto& recs : cell_records)
        for (auto& r : recs) result.records.push_back(std::move(r));
    return result;
}

/// Geometric-Brownian-style synthetic monthly panel: per-asset drift and
/// volatility drawn from the given ranges, shocks correlated through a
/// random orthogonal mixing of independent factors. Deterministic per seed.
inline ReturnsPanel generate_synthetic_panel(int n, int t, std::uint64_t seed,
                                             std::pair<double, double> vol_range = {0.04, 0.12},
                                             std::pair<double, double> drift_range = {0.002, 0.018}) {
    if (n < 2 || t < 2) throw std::invalid_argument("generate_synthetic_panel: need n >= 2, T >= 2");
    if (!(vol_range.first > 0.0) || vol_range.second < vol_range.first)
        throw std::invalid_argument("generate_synthetic_panel: invalid vol range");
    if (drift_range.second < drift_range.first)
        throw std::invalid_argument("generate_synthetic_panel: invalid drift range");

    Rng rng(derive_seed(seed, {0xA11CE}));
    auto uniform_in = [&](std::pair<double, double> r) {
        return r.first + (r.second - r.first) * rng.uniform01();
    };

    Eigen::VectorXd vol(n), drift(n), factor_var(n);
    for (int i = 0; i < n; ++i) vol[i] = uniform_in(vol_range);
    for (int i = 0; i < n; ++i) drift[i] = uniform_in(drift_range);
    for (int i = 0; i < n; ++i) factor_var[i] = uniform_in({0.5, 2.0});

    Eigen::MatrixXd g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = norm_ppf(rng.uniform01());
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r_mat = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j)
        if (r_mat(j, j) < 0.0) q.col(j) *= -1.0;

    // Unit-variance correlated shock loadings.
    Eigen::MatrixXd b = q * factor_var.cwiseSqrt().asDiagonal();
    for (int i = 0; i < n; ++i) b.row(i) /= b.row(i).norm();

    Eigen::MatrixXd returns(t, n);
    std::vector<std::string> dates;
    for (int tt = 0; tt < t; ++tt) {
        Eigen::VectorXd z(n);
        for (int i = 0; i < n; ++i) z[i] = norm_ppf(rng.uniform01());
        const Eigen::VectorXd eps = b * z;
        for (int i = 0; i < n; ++i)
            returns(tt, i) = std::exp(drift[i] - 0.5 * vol[i] * vol[i] + vol[i] * eps[i]) - 1.0;
        const int year = 2000 + tt / 12;
        const int month = 1 + tt % 12;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-%02d", year, month);
        dates.emplace_back(buf);
    }
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) ids.push_back("A" + std::to_string(i + 1));
    return ReturnsPanel(std::move(dates), std::move(ids), std::move(returns));
}

// ---------------------------------------------------------------------------
// Win tables and report emission
// ---------------------------------------------------------------------------

struct WinCounts {
    std::map<std::string, std::map<int, int>> by_k;  // method -> K -> wins
    std::map<std::string, int> total;                // method -> wins over all cells
};

struct WinReport {
    WinCounts sr_overall, sr_group, ceq_overall, ceq_group;
    // (d, c) -> method -> overall wins summed over K
    std::map<std::pair<double, double>, std::map<std::string, int>> sr_by_dc, ceq_by_dc;
};

/// Winner counting per cell: overall across every method in the grid and
/// separately within the robust and social-choice groups, both with the
/// 1% relative band.
inline WinReport compute_win_report(const GridResult& result, const ExperimentGrid& grid,
                                    double rel_tol = 0.01) {
    WinReport rep;
    for (MethodId m : grid.methods) {
        rep.sr_overall.total[method_name(m)] = 0;
        rep.sr_group.total[method_name(m)] = 0;
        rep.ceq_overall.total[method_name(m)] = 0;
        rep.ceq_group.total[method_name(m)] = 0;
        for (int k : grid.ks) {
            rep.sr_overall.by_k[method_name(m)][k] = 0;
            rep.sr_group.by_k[method_name(m)][k] = 0;
            rep.ceq_overall.by_k[method_name(m)][k] = 0;
            rep.ceq_group.by_k[method_name(m)][k] = 0;
        }
    }

    std::map<std::tuple<int, double, double>, std::vector<const metrics::PerformanceRecord*>> cells;
    for (const auto& rec : result.records) cells[{rec.k, rec.d, rec.c}].push_back(&rec);

    for (const auto& [key, recs] : cells) {
        const auto [k, d, c] = key;
        std::map<std::string, double> sr_all, ceq_all, sr_rob, ceq_rob, sr_soc, ceq_soc;
        for (const auto* r : recs) {
            sr_all[r->method] = r->sr;
            ceq_all[r->method] = r->ceq;
            if (is_robust(parse_method(r->method))) {
                sr_rob[r->method] = r->sr;
                ceq_rob[r->method] = r->ceq;
            } else {
                sr_soc[r->method] = r->sr;
                ceq_soc[r->method] = r->ceq;
            }
        }
        auto credit = [&](WinCounts& wc, const std::set<std::string>& winners) {
            for (const auto& w : winners) {
                wc.total[w] += 1;
                wc.by_k[w][k] += 1;
            }
        };
        const auto sr_winners = metrics::count_wins(sr_all, rel_tol);
        const auto ceq_winners = metrics::count_wins(ceq_all, rel_tol);
        credit(rep.sr_overall, sr_winners);
        credit(rep.ceq_overall, ceq_winners);
        if (!sr_rob.empty()) credit(rep.sr_group, metrics::count_wins(sr_rob, rel_tol));
        if (!sr_soc.empty()) credit(rep.sr_group, metrics::count_wins(sr_soc, rel_tol));
        if (!ceq_rob.empty()) credit(rep.ceq_group, metrics::count_wins(ceq_rob, rel_tol));
        if (!ceq_soc.empty()) credit(rep.ceq_group, metrics::count_wins(ceq_soc, rel_tol));
        for (const auto& w : sr_winners) rep.sr_by_dc[{d, c}][w] += 1;
        for (const auto& w : ceq_winners) rep.ceq_by_dc[{d, c}][w] += 1;
    }
    return rep;
}

namespace detail {

inline std::string format_param(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

inline void write_win_csv(const std::string& path, const ExperimentGrid& grid,
                          const WinCounts& group, const WinCounts& overall) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "method,group,K,wins_in_group,wins_overall\n";
    for (MethodId m : grid.methods) {
        const std::string name = method_name(m);
        for (int k : grid.ks)
            out << name << ',' << method_group(m) << ',' << k << ','
                << group.by_k.at(name).at(k) << ',' << overall.by_k.at(name).at(k) << '\n';
        out << name << ',' << method_group(m) << ",total," << group.total.at(name) << ','
            << overall.total.at(name) << '\n';
    }
}

}  // namespace detail

/// Writes sr_wins.csv, ceq_wins.csv, per_cell_metrics.csv and summary.md
/// into out_dir. Output is byte-deterministic for a given result.
inline void write_reports(const GridResult& result, const ExperimentGrid& grid,
                          const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const WinReport rep = compute_win_report(result, grid);

    {
        std::ofstream out(out_dir + "/per_cell_metrics.csv");
        if (!out) throw std::runtime_error("cannot write per_cell_metrics.csv");
        out << "K,d,c,method,sr,ceq\n";
        for (const auto& rec : result.records)
            out << rec.k << ',' << detail::format_param(rec.d) << ',' << detail::format_param(rec.c)
                << ',' << rec.method << ',' << io::detail::format_fixed4(rec.sr) << ','
                << io::detail::format_fixed4(rec.ceq) << '\n';
    }
    detail::write_win_csv(out_dir + "/sr_wins.csv", grid, rep.sr_group, rep.sr_overall);
    detail::write_win_csv(out_dir + "/ceq_wins.csv", grid, rep.ceq_group, rep.ceq_overall);

    std::ofstream md(out_dir + "/summary.md");
    if (!md) throw std::runtime_error("cannot write summary.md");
    md << "# Horse race summary\n\n";
    md << "Grid: K in {";
    for (std::size_t i = 0; i < grid.ks.size(); ++i) md << (i ? "," : "") << grid.ks[i];
    md << "}, d in {";
    for (std::size_t i = 0; i < grid.ds.size(); ++i)
        md << (i ? "," : "") << detail::format_param(grid.ds[i]);
    md << "}, c in {";
    for (std::size_t i = 0; i < grid.cs.size(); ++i)
        md << (i ? "," : "") << detail::format_param(grid.cs[i]);
    md << "}, delta = " << detail::format_param(grid.delta) << ", seed = " << grid.seed << "\n\n";
    md << "Cells per metric: " << grid.ks.size() * grid.ds.size() * grid.cs.size()
       << "; wins use a 1% band of the best value.\n\n";

    md << "## Wins by method (within group / overall)\n\n";
    md << "| method | group |";
    for (int k : grid.ks) md << " K=" << k << " |";
    md << " total |\n";
    md << "|---|---|";
    for (std::size_t i = 0; i < grid.ks.size(); ++i) md << "---|";
    md << "---|\n";
    for (MethodId m : grid.methods) {
        const std::string name = method_name(m);
        md << "| " << name << " | " << method_group(m) << " |";
        for (int k : grid.ks)
            md << ' ' << rep.sr_group.by_k.at(name).at(k) << " / " << rep.sr_overall.by_k.at(name).at(k)
               << " |";
        md << ' ' << rep.sr_group.total.at(name) << " / " << rep.sr_overall.total.at(name) << " |\n";
    }
    md << "\n(SR wins; the same table for CEQ follows.)\n\n";
    md << "| method | group |";
    for (int k : grid.ks) md << " K=" << k << " |";
    md << " total |\n";
    md << "|---|---|";
    for (std::size_t i = 0; i < grid.ks.size(); ++i) md << "---|";
    md << "---|\n";
    for (MethodId m : grid.methods) {
        const std::string name = method_name(m);
        md << "| " << name << " | " << method_group(m) << " |";
        for (int k : grid.ks)
            md << ' ' << rep.ceq_group.by_k.at(name).at(k) << " / "
               << rep.ceq_overall.by_k.at(name).at(k) << " |";
        md << ' ' << rep.ceq_group.total.at(name) << " / " << rep.ceq_overall.total.at(name) << " |\n";
    }

    md << "\n## Overall wins per (d, c), summed over K\n\n";
    md << "| d | c | metric |";
    for (MethodId m : grid.methods) md << ' ' << method_name(m) << " |";
    md << "\n|---|---|---|";
    for (std::size_t i = 0; i < grid.methods.size(); ++i) md << "---|";
    md << '\n';
    for (double d : grid.ds)
        for (double c : grid.cs) {
            md << "| " << detail::format_param(d) << " | " << detail::format_param(c) << " | SR |";
            for (MethodId m : grid.methods) {
                const auto& row = rep.sr_by_dc.count({d, c}) ? rep.sr_by_dc.at({d, c})
                                                             : std::map<std::string, int>{};
                const auto it = row.find(method_name(m));
                md << ' ' << (it == row.end() ? 0 : it->second) << " |";
            }
            md << '\n';
            md << "| " << detail::format_param(d) << " | " << detail::format_param(c) << " | CEQ |";
            for (MethodId m : grid.methods) {
                const auto& row = rep.ceq_by_dc.count({d, c}) ? rep.ceq_by_dc.at({d, c})
                                                              : std::map<std::string, int>{};
                const auto it = row.find(method_name(m));
                md << ' ' << (it == row.end() ? 0 : it->second) << " |";
            }
            md << '\n';
        }
}

}  // namespace rankfolio::harness
