// logspect: batch driver for graph learning experiments.
//
// Exit codes: 0 success, 2 configuration or input error, 3 numerical
// failure in at least one trial (the rows carry the flag).

#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "experiment.hpp"

using namespace logspect;
using namespace logspect::cli;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

/// Flags shared by the experiment subcommands. Each one overrides a config
/// key after the config file and --set assignments are applied.
struct ExperimentFlags {
    std::string config_path;
    std::vector<std::string> sets;
    std::vector<std::pair<std::string, std::string>> flags;  // dotted key, JSON text

    void add(CLI::App* app) {
        app->add_option("-c,--config", config_path, "JSON config file");
        app->add_option("--set", sets, "Override a config key, e.g. --set solver.alpha=2");
        auto value = [&](const std::string& name, const std::string& key, const std::string& help, bool quote) {
            app->add_option_function<std::string>(
                name, [this, key, quote](const std::string& v) { flags.emplace_back(key, quote ? Json(v).dump() : v); },
                help);
        };
        value("--output-dir", "output_dir", "Output directory; relative paths go under $LOGSPECT_OUTPUT_ROOT", true);
        value("--threads", "threads", "Worker threads", false);
        value("--trials", "trials", "Trials per sample count", false);
        value("--seed", "root_seed", "Root seed", false);
        value("--method", "method", "rLogSpecT, rSpecT, LogSpecT, SpecT-ideal or Correlation", true);
        value("--family", "ensemble.family", "Graph family, ER or BA", true);
        value("--m", "ensemble.m", "Node count", false);
        value("--p", "ensemble.p", "ER edge probability", false);
        value("--filter", "filter", "lowpass-exp(t), highpass-exp(t), qua or poly(h0;h1;...)", true);
        app->add_option_function<std::vector<long long>>(
            "--n-grid", [this](const std::vector<long long>& v) { flags.emplace_back("n_grid", Json(v).dump()); },
            "Sample counts, 0 for the exact covariance");
        value("--delta-rule", "delta_rule", "sqrt-log-n(c) or cov-gap(k)", true);
        value("--exact-equivalent-n", "exact_equivalent_n", "n used by sqrt-log-n for the exact covariance", false);
        value("--binarization", "binarization.kind", "fixed, searching or training", true);
        value("--eps", "binarization.eps", "Fixed threshold", false);
        value("--grid-size", "binarization.grid_size", "Threshold grid points", false);
        value("--train-set-size", "binarization.train_set_size", "Training graphs per sample count", false);
        value("--eps-eq", "eps_eq", "Relative radius standing in for the equality constraint", false);
        value("--filter-law", "filter_law.kind", "feascheck filters: random-quadratic or fixed", true);
        value("--sigma", "filter_law.sigma", "Standard deviation of random filter coefficients", false);
        app->add_flag_function("--center", [this](std::int64_t) { flags.emplace_back("center", "true"); },
                               "Subtract the sample mean");
        // Solver keys, one flag per field.
        value("--alpha", "solver.alpha", "Log-barrier weight", false);
        value("--delta", "solver.delta", "Ball radius (per-trial runs take it from the delta rule)", false);
        value("--rho0", "solver.rho0", "Initial penalty", false);
        value("--tau", "solver.tau", "Proximal parameter", false);
        value("--allow-unsafe-tau", "solver.allow_unsafe_tau", "Accept tau below the convergence threshold", false);
        value("--max-iters", "solver.max_iters", "Iteration budget", false);
        value("--eps-primal", "solver.eps_primal", "Primal residual tolerance", false);
        value("--eps-dual", "solver.eps_dual", "Dual residual tolerance", false);
        value("--rho-adapt", "solver.rho_adapt", "Adapt the penalty (true/false)", false);
        value("--rho-adapt-iters", "solver.rho_adapt_iters", "Iterations after which rho is frozen", false);
        value("--rho-adapt-every", "solver.rho_adapt_every", "Iterations between rho updates", false);
        value("--normalize-covariance", "solver.normalize_covariance", "Rescale C internally (true/false)", false);
    }

    ExperimentConfig resolve() const {
        ExperimentConfig c = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
        for (const auto& s : sets) apply_override(c, s);
        for (const auto& [key, text] : flags) apply_override(c, key + "=" + text);
        return c;
    }
};

int report_rows(const RunSummary& s, const std::string& what) {
    std::cerr << what << ": " << s.rows_written << " rows written";
    if (s.rows_skipped) std::cerr << ", " << s.rows_skipped << " already present";
    if (s.failed) std::cerr << ", " << s.failed << " flagged";
    std::cerr << '\n';
    return s.failed ? kExitNumerical : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Graph learning from stationary signals"};
    app.require_subcommand(1);

    ExperimentFlags gen_flags, solve_flags, curve_flags, feas_flags;
    auto* gen = app.add_subcommand("generate", "Write graphs, signals and a manifest");
    gen_flags.add(gen);
    auto* solve = app.add_subcommand("solve", "Run a method over trials and sample counts (resumable)");
    solve_flags.add(solve);
    auto* curve = app.add_subcommand("recovery-curve", "Median error trends against the LogSpecT reference");
    curve_flags.add(curve);
    auto* feas = app.add_subcommand("feascheck", "Infeasibility frequency of rSpecT");
    feas_flags.add(feas);

    auto* eval = app.add_subcommand("eval", "Score a learned graph or summarize a results file");
    std::string results, learned, truth, bin_kind = "searching";
    double eps = 0.5;
    int grid = 101;
    eval->add_option("--results", results, "results.csv from solve");
    eval->add_option("--learned", learned, "Weighted graph file");
    eval->add_option("--truth", truth, "Ground-truth graph file");
    eval->add_option("--binarization", bin_kind, "fixed or searching");
    eval->add_option("--eps", eps, "Fixed threshold");
    eval->add_option("--grid-size", grid, "Threshold grid points");

    auto* verify = app.add_subcommand("verify", "Check files against a manifest");
    std::string manifest;
    verify->add_option("manifest", manifest, "manifest.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (gen->parsed()) {
            const auto m = cmd_generate(gen_flags.resolve());
            std::cerr << "generate: " << m.at("files").size() << " files, manifest written\n";
            return 0;
        }
        if (solve->parsed()) return report_rows(cmd_solve(solve_flags.resolve()), "solve");
        if (curve->parsed()) return report_rows(cmd_recovery_curve(curve_flags.resolve()), "recovery-curve");
        if (feas->parsed()) return report_rows(cmd_feascheck(feas_flags.resolve()), "feascheck");
        if (eval->parsed()) {
            if (!results.empty()) {
                std::cout << eval_results(results).dump(2) << '\n';
                return 0;
            }
            if (learned.empty() || truth.empty()) throw ConfigError("eval needs --results or both --learned and --truth");
            BinarizationStrategy b = parse_binarization_kind(bin_kind) == BinarizationStrategy::Kind::Fixed
                                         ? BinarizationStrategy::fixed(eps)
                                         : BinarizationStrategy::searching(grid);
            if (parse_binarization_kind(bin_kind) == BinarizationStrategy::Kind::TrainingBased)
                throw ConfigError("eval supports fixed and searching binarization");
            b.validate();
            std::cout << eval_graphs(learned, truth, b).dump(2) << '\n';
            return 0;
        }
        if (verify->parsed()) {
            const auto bad = verify_manifest(manifest);
            for (const auto& p : bad) std::cerr << "hash mismatch: " << p << '\n';
            if (!bad.empty()) return kExitConfig;
            std::cerr << "verify: all files match\n";
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ParameterError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ParseError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
