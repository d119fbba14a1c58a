// Command line front end: aggregate / estimate / solve / simulate.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "rankfolio/aggregation.hpp"
#include "rankfolio/core_model.hpp"
#include "rankfolio/estimator.hpp"
#include "rankfolio/harness.hpp"
#include "rankfolio/io.hpp"
#include "rankfolio/metrics.hpp"
#include "rankfolio/ordinal.hpp"
#include "rankfolio/solvers.hpp"

namespace {

using namespace rankfolio;

std::string join_ids(const std::vector<std::string>& ids, const core_model::TotalOrder& order) {
    std::string out;
    for (int a : order.assets_by_rank()) {
        if (!out.empty()) out += ',';
        out += ids[static_cast<std::size_t>(a)];
    }
    return out;
}

int run_aggregate(const std::string& input, const std::string& method, bool local_improve,
                  const std::string& out_path) {
    const auto lines = io::read_order_lines(input);
    const auto universe = io::order_file_universe(lines);
    std::vector<core_model::TotalOrder> orders;
    for (const auto& line : lines) orders.push_back(io::order_from_tokens(line, universe));
    const aggregation::OrderProfile profile(orders);

    core_model::TotalOrder consensus = [&] {
        if (method == "borda") return aggregation::borda(profile);
        if (method == "footrule") return aggregation::footrule_aggregate(profile);
        if (method == "copeland") return aggregation::copeland(profile);
        if (method == "bestofk") return aggregation::best_of_k(profile);
        if (method == "mc4") return aggregation::mc4(profile);
        if (method == "kemeny") return aggregation::kemeny_exact(profile);
        throw CLI::ValidationError("--method", "unknown aggregation method '" + method + "'");
    }();
    if (local_improve) consensus = aggregation::local_improvement(consensus, profile);

    std::ostringstream body;
    body << "consensus," << join_ids(universe, consensus) << '\n';
    body << "kt_score," << io::detail::format_full(aggregation::kt_score(consensus, profile)) << '\n';
    if (out_path.empty()) {
        std::cout << body.str();
    } else {
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot write " + out_path);
        out << body.str();
    }
    return 0;
}

int run_estimate(const std::string& panel_path, const std::string& order_path, double c,
                 std::optional<double> tau, double delta, std::int64_t samples, std::int64_t burn_in,
                 std::uint64_t seed, const std::string& out_path) {
    const auto panel = io::read_panel_csv(panel_path);
    const auto lines = io::read_order_lines(order_path);
    const auto order = io::order_from_tokens(lines.front(), panel.asset_ids);

    const double tau_value = tau ? *tau : 1.0 - c;
    const core_model::ModelConfig cfg(delta, c, tau_value);
    const auto sigma = core_model::estimate_covariance(panel);
    const auto pi = core_model::reverse_optimize_prior(
        sigma, core_model::Portfolio::equal_weights(panel.assets()), delta);

    estimator::SamplerConfig sc;
    sc.n_samples = samples;
    sc.burn_in = burn_in;
    Rng rng(seed);
    const auto post = estimator::ebl_posterior(pi, sigma, order, cfg, sc, rng);

    std::ostringstream body;
    body << "asset,mu,se\n";
    for (Eigen::Index i = 0; i < post.mu.size(); ++i)
        body << panel.asset_ids[static_cast<std::size_t>(i)] << ','
             << io::detail::format_full(post.mu[i]) << ',' << io::detail::format_full(post.se[i])
             << '\n';
    if (out_path.empty()) {
        std::cout << body.str();
    } else {
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot write " + out_path);
        out << body.str();
    }
    return 0;
}

int run_solve(const std::string& scenarios_path, const std::string& sigma_path,
              const std::string& method, double gamma, double delta, double tol) {
    const Eigen::MatrixXd mu_rows = io::read_matrix_csv(scenarios_path);
    const Eigen::MatrixXd sigma_raw = io::read_matrix_csv(sigma_path);
    const core_model::CovarianceMatrix sigma(sigma_raw);
    std::vector<Eigen::VectorXd> mus;
    for (Eigen::Index r = 0; r < mu_rows.rows(); ++r) mus.push_back(mu_rows.row(r).transpose());

    solvers::SolveReport report = [&] {
        if (method == "mvo") {
            if (mus.size() != 1)
                throw CLI::ValidationError("--method", "mvo expects exactly one scenario row");
            return solvers::solve_mvo(mus[0], sigma, delta, tol);
        }
        const solvers::ScenarioSet scen(mus, sigma, delta);
        if (method == "maxmin") return solvers::solve_maxmin(scen, tol);
        if (method == "minregret") return solvers::solve_min_regret(scen, tol);
        if (method == "soft") return solvers::solve_soft(scen, gamma, tol);
        throw CLI::ValidationError("--method", "unknown solve method '" + method + "'");
    }();

    std::cout << "w";
    for (Eigen::Index i = 0; i < report.w.weights().size(); ++i)
        std::cout << ',' << io::detail::format_full(report.w.weights()[i]);
    std::cout << '\n';
    std::cout << "objective," << io::detail::format_full(report.objective) << '\n';
    std::cout << "kkt_residual," << io::detail::format_full(report.kkt_residual) << '\n';
    std::cout << "iterations," << report.iterations << '\n';
    std::cout << "active_scenarios";
    for (int k : report.active_scenarios) std::cout << ',' << k;
    std::cout << '\n';
    return 0;
}

int run_simulate(const std::string& panel_path, const std::string& synthetic,
                 const std::string& grid_path, const std::string& out_dir, std::uint64_t seed,
                 bool seed_given, int threads, std::int64_t samples, std::int64_t burn_in) {
    std::optional<core_model::ReturnsPanel> panel;
    if (!panel_path.empty()) {
        panel = io::read_panel_csv(panel_path);
    } else if (!synthetic.empty()) {
        int n = 10, t = 120;
        std::uint64_t synth_seed = 0;
        for (const auto& kv : io::detail::split(synthetic, ',')) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw CLI::ValidationError("--synthetic", "expected n=..,T=.. pairs");
            const std::string key = io::detail::trim(kv.substr(0, eq));
            const std::string val = io::detail::trim(kv.substr(eq + 1));
            if (key == "n") n = std::stoi(val);
            else if (key == "T") t = std::stoi(val);
            else if (key == "seed") synth_seed = std::stoull(val);
            else throw CLI::ValidationError("--synthetic", "unknown key '" + key + "'");
        }
        panel = harness::generate_synthetic_panel(n, t, synth_seed);
    } else {
        throw CLI::ValidationError("simulate", "need --panel or --synthetic");
    }

    harness::ExperimentGrid grid;
    if (!grid_path.empty()) {
        const auto cfg = io::parse_grid_config(grid_path);
        if (!cfg.ks.empty()) grid.ks = cfg.ks;
        if (!cfg.ds.empty()) grid.ds = cfg.ds;
        if (!cfg.cs.empty()) grid.cs = cfg.cs;
        if (!cfg.methods.empty()) {
            grid.methods.clear();
            for (const auto& m : cfg.methods) grid.methods.push_back(harness::parse_method(m));
        }
        grid.delta = cfg.delta;
        grid.seed = cfg.seed;
        grid.resample_views_monthly = cfg.resample_views_monthly;
        grid.annualize_sr = cfg.annualize_sr;
        // rf: scalar literal or a one-column CSV aligned to evaluation periods
        try {
            grid.rf_const = io::detail::parse_double(cfg.rf, "rf");
        } catch (const std::exception&) {
            const Eigen::MatrixXd rf = io::read_matrix_csv(cfg.rf);
            if (rf.cols() != 1) throw std::runtime_error("rf CSV must have one column");
            grid.rf_series.assign(rf.data(), rf.data() + rf.rows());
        }
    }
    if (seed_given) grid.seed = seed;
    grid.sampler.n_samples = samples;
    grid.sampler.burn_in = burn_in;

    const auto result = harness::run_grid(*panel, grid, threads);
    harness::write_reports(result, grid, out_dir);
    std::cout << "wrote " << out_dir << "/{sr_wins.csv,ceq_wins.csv,per_cell_metrics.csv,summary.md}\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rank-view portfolio toolkit"};
    app.require_subcommand(1);

    // aggregate
    auto* agg = app.add_subcommand("aggregate", "aggregate a profile of total orders");
    std::string agg_input, agg_method = "borda", agg_out;
    bool agg_local = false;
    agg->add_option("--input", agg_input, "profile file: one order per line, comma-separated ids by rank")
        ->required();
    agg->add_option("--method", agg_method, "borda|footrule|copeland|bestofk|mc4|kemeny");
    agg->add_flag("--local-improve", agg_local, "apply the local improvement pass");
    agg->add_option("--out", agg_out, "output file (default stdout)");

    // estimate
    auto* est = app.add_subcommand("estimate", "posterior expected returns for one ranked view");
    std::string est_panel, est_order, est_out;
    double est_c = 0.5, est_delta = 3.0;
    std::optional<double> est_tau;
    std::int64_t est_samples = 50000, est_burn = 2000;
    std::uint64_t est_seed = 0;
    est->add_option("--panel", est_panel, "returns panel CSV")->required();
    est->add_option("--order", est_order, "order file; first line is used")->required();
    est->add_option("--c", est_c, "view confidence level (smaller = more trust)");
    est->add_option("--tau", est_tau, "prior uncertainty (default 1-c)");
    est->add_option("--delta", est_delta, "risk aversion");
    est->add_option("--samples", est_samples, "Gibbs samples");
    est->add_option("--burn-in", est_burn, "Gibbs burn-in sweeps");
    est->add_option("--seed", est_seed, "random seed");
    est->add_option("--out", est_out, "output CSV (default stdout)");

    // solve
    auto* sol = app.add_subcommand("solve", "portfolio optimization over return scenarios");
    std::string sol_scen, sol_sigma, sol_method = "mvo";
    double sol_gamma = 0.5, sol_delta = 3.0, sol_tol = 1e-8;
    sol->add_option("--scenarios", sol_scen, "CSV with K rows of expected returns")->required();
    sol->add_option("--sigma", sol_sigma, "covariance CSV")->required();
    sol->add_option("--method", sol_method, "mvo|maxmin|minregret|soft");
    sol->add_option("--gamma", sol_gamma, "soft robustness quantile parameter");
    sol->add_option("--delta", sol_delta, "risk aversion");
    sol->add_option("--tol", sol_tol, "KKT residual tolerance");

    // simulate
    auto* sim = app.add_subcommand("simulate", "run the (K, d, c) horse race");
    std::string sim_panel, sim_synth, sim_grid, sim_out = "out";
    std::uint64_t sim_seed = 0;
    int sim_threads = static_cast<int>(std::thread::hardware_concurrency());
    std::int64_t sim_samples = 50000, sim_burn = 2000;
    sim->add_option("--panel", sim_panel, "returns panel CSV");
    sim->add_option("--synthetic", sim_synth, "synthetic panel spec, e.g. n=10,T=120,seed=1");
    sim->add_option("--grid", sim_grid, "grid config file");
    auto* seed_opt = sim->add_option("--seed", sim_seed, "master seed (overrides grid file)");
    sim->add_option("--out", sim_out, "output directory");
    sim->add_option("--threads", sim_threads, "worker threads across grid cells");
    sim->add_option("--samples", sim_samples, "Gibbs samples per posterior");
    sim->add_option("--burn-in", sim_burn, "Gibbs burn-in sweeps");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(agg)) return run_aggregate(agg_input, agg_method, agg_local, agg_out);
        if (app.got_subcommand(est))
            return run_estimate(est_panel, est_order, est_c, est_tau, est_delta, est_samples,
                                est_burn, est_seed, est_out);
        if (app.got_subcommand(sol))
            return run_solve(sol_scen, sol_sigma, sol_method, sol_gamma, sol_delta, sol_tol);
        if (app.got_subcommand(sim))
            return run_simulate(sim_panel, sim_synth, sim_grid, sim_out, sim_seed,
                                seed_opt->count() > 0, sim_threads, sim_samples, sim_burn);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
