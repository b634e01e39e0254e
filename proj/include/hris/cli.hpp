#pragma once

// Command-line front end:
//   hris solve    --config FILE [--out DIR] [--eps E]
//   hris sweep    --config FILE [--out DIR] [--jobs N]
//   hris verify   {compat|bounds|lipschitz|unique|dual|history} --config FILE
//   hris optimize --config FILE [--seed N]
// Exit status: 0 ok, 1 numerical failure, 2 configuration error.

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "compatibility.hpp"
#include "config.hpp"
#include "control.hpp"
#include "table.hpp"
#include "verify.hpp"
#include "viscous.hpp"
#include "vv.hpp"

namespace hris {

inline Table trajectory_table(const Trajectory& q)
{
    Table t{{"t"}, {}};
    const std::size_t n = q.state(0).size();
    for (std::size_t i = 0; i < n; ++i) {
        t.columns.push_back("q_" + std::to_string(i));
    }
    for (std::size_t k = 0; k < q.size(); ++k) {
        std::vector<double> row{q.time(k)};
        for (std::size_t i = 0; i < n; ++i) {
            row.push_back(q.state(k)[i]);
        }
        t.add(std::move(row));
    }
    return t;
}

inline Table report_table(const SolveReport& r)
{
    Table t{{"t", "balance_residual", "polar_violation", "rate_norm", "state_norm", "dissipation", "energy",
             "inner_iterations"},
            {}};
    for (std::size_t k = 0; k < r.times.size(); ++k) {
        t.add({r.times[k], r.energy_balance_residuals[k], r.polar_violations[k], r.rate_norms[k], r.state_norms[k],
               r.dissipation_values[k], r.energies[k], double(r.inner_iterations[k])});
    }
    return t;
}

namespace detail {

struct CliContext {
    Config cfg;
    std::filesystem::path out;
    std::ostream& os;
    std::ostream& es;

    void write(const std::string& name, const Table& t) const { write_csv((out / name).string(), t, cfg.hash); }
};

inline std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

inline void warn_compatibility(const CliContext& c)
{
    const auto rep = compatibility_check(c.cfg.scenario);
    if (!rep.compatible) {
        c.os << "WARNING: l(0) violates the compatibility condition l(0) in d_2 R(y0, 0) at "
             << rep.violating_nodes.size() << " node(s); max excess " << fmt(rep.max_excess) << "\n";
    }
}

inline int cmd_solve(const CliContext& c)
{
    warn_compatibility(c);
    const auto sol = solve_viscous(c.cfg.scenario, c.cfg.eps, c.cfg.solve);
    c.write("trajectory.csv", trajectory_table(sol.trajectory));
    c.write("report.csv", report_table(sol.report));
    c.os << "solve: eps=" << fmt(c.cfg.eps) << " steps=" << c.cfg.scenario.n_steps
         << " max_balance_residual=" << fmt(sol.report.max_balance_residual())
         << " max_polar_violation=" << fmt(sol.report.max_polar_violation())
         << " q_h1=" << fmt(sol.report.trajectory_h1_norm) << "\n";
    return 0;
}

inline int cmd_sweep(const CliContext& c)
{
    SweepOptions opt;
    opt.solve = c.cfg.solve;
    opt.jobs = c.cfg.jobs;
    const auto res = vv_sweep(c.cfg.scenario, c.cfg.schedule, opt);
    if (!res.warning.empty()) {
        c.os << "WARNING: " << res.warning << "\n";
    }
    Table summary{{"eps", "cauchy_diff_h1", "cauchy_diff_c", "max_balance_residual", "max_polar_violation"}, {}};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k < res.eps_schedule.size(); ++k) {
        const bool has = k < res.cauchy_diffs_c.size();
        summary.add({res.eps_schedule[k], has ? res.cauchy_diffs_h1[k] : nan, has ? res.cauchy_diffs_c[k] : nan,
                     res.reports[k].max_balance_residual(), res.reports[k].max_polar_violation()});
        c.write("trajectory_eps" + std::to_string(k) + ".csv", trajectory_table(res.trajectories[k]));
    }
    c.write("sweep.csv", summary);
    Table cert{{"t", "stability_violation", "balance_residual"}, {}};
    for (std::size_t k = 0; k < res.certification.times.size(); ++k) {
        cert.add({res.certification.times[k], res.certification.stability_violations[k],
                  res.certification.balance_residuals[k]});
    }
    c.write("certificate.csv", cert);
    c.os << "sweep: levels=" << res.eps_schedule.size() << " cauchy_ratios=";
    const auto ratios = res.cauchy_ratios();
    for (std::size_t k = 0; k < ratios.size(); ++k) {
        c.os << (k ? "," : "") << fmt(ratios[k]);
    }
    c.os << " certificate=" << (res.certification.pass ? "PASS" : "FAIL")
         << " (stability " << fmt(res.certification.max_stability_violation()) << ", balance "
         << fmt(res.certification.max_balance_residual()) << ", tol " << fmt(res.certification.tolerance) << ")\n";
    return 0;
}

inline void verdict(const CliContext& c, const std::string& name, bool pass, const std::string& detail)
{
    c.os << (pass ? "PASS " : "FAIL ") << name << ": " << detail << "\n";
}

inline int cmd_verify(const CliContext& c, const std::string& experiment)
{
    const Config& cfg = c.cfg;
    const auto& x = cfg.experiments;
    if (experiment == "compat") {
        const auto rep = compatibility_check(cfg.scenario);
        const Mesh& mesh = *cfg.scenario.mesh;
        const DualField l0 = cfg.scenario.load(0.0);
        const DualField thr = threshold(cfg.scenario.dissipation, cfg.scenario.kernel.y0, mesh);
        Table t{{"node", "load0", "threshold"}, {}};
        for (std::size_t i = 0; i < mesh.n_nodes(); ++i) {
            t.add({double(i), l0[i], thr[i]});
        }
        c.write("compat.csv", t);
        if (!rep.compatible) {
            warn_compatibility(c);
        }
        verdict(c, "compat", rep.compatible,
                std::to_string(rep.violating_nodes.size()) + " violating node(s), max excess " + fmt(rep.max_excess));
        return 0;
    }
    if (experiment == "bounds") {
        const auto rep = uniform_bound_experiment(experiment_config(cfg));
        c.write("bounds.csv", rep.table());
        verdict(c, "bounds", rep.pass,
                "constant variation across eps " + fmt(rep.variation) + " (limit " + fmt(x.variation_limit) +
                    "), max ratio " + fmt(rep.max_ratio));
        return 0;
    }
    if (experiment == "lipschitz") {
        const auto rep = lipschitz_experiment(experiment_config(cfg));
        c.write("lipschitz.csv", rep.table());
        verdict(c, "lipschitz", rep.pass,
                "cross-eps variation " + fmt(rep.variation) + " (limit " + fmt(x.variation_limit) + "), max ratio " +
                    fmt(rep.max_ratio));
        return 0;
    }
    if (experiment == "unique") {
        const auto rep = uniqueness_probe(cfg.scenario, cfg.eps, cfg.solve.qp, cfg.jobs);
        Table t{{"t"}, {}};
        for (const auto& v : rep.variants) {
            t.columns.push_back(v + "_h1");
        }
        for (std::size_t k = 0; k <= cfg.scenario.n_steps; ++k) {
            const double time = cfg.scenario.time(k);
            std::vector<double> row{time};
            for (const auto& q : rep.trajectories) {
                row.push_back(h1_norm(*cfg.scenario.mesh, q.at(time)));
            }
            t.add(std::move(row));
        }
        c.write("unique.csv", t);
        const std::string detail = "max pairwise gap " + fmt(rep.gap) + " (tol " + fmt(x.unique_tolerance) + ")";
        if (cfg.scenario.dissipation.is_fatigue()) {
            verdict(c, "unique", rep.gap <= x.unique_tolerance, detail);
        }
        else {
            c.os << "INFO unique: " << detail << "; no uniqueness claim for weighted_l1\n";
        }
        return 0;
    }
    if (experiment == "dual") {
        const auto rep = dual_equivalence(cfg.scenario, cfg.eps, cfg.solve);
        c.write("dual.csv", rep.table());
        verdict(c, "dual", rep.max_residual() <= x.dual_tolerance,
                "primal " + fmt(rep.max_primal) + ", dual " + fmt(rep.max_dual) + " (tol " + fmt(x.dual_tolerance) +
                    ")");
        return 0;
    }
    if (experiment == "history") {
        const auto sol = solve_viscous(cfg.scenario, cfg.eps, cfg.solve);
        const auto rep = history_lipschitz_check(sol.trajectory, cfg.scenario, x.history_samples, cfg.seed);
        c.write("history.csv", rep.table());
        verdict(c, "history", rep.rows.empty() || rep.max_excess <= x.history_tolerance,
                "max excess " + fmt(rep.rows.empty() ? 0.0 : rep.max_excess) + " over " +
                    std::to_string(rep.rows.size()) + " samples, " + std::to_string(rep.skipped) + " skipped (tol " +
                    fmt(x.history_tolerance) + ")");
        return 0;
    }
    throw ConfigError("unknown experiment '" + experiment + "'");
}

inline int cmd_optimize(const CliContext& c)
{
    const auto problem = control_problem(c.cfg);
    const auto res = optimize(problem, c.cfg.control.search);
    c.write("trace.csv", res.table());
    double max_ratio = 0.0;
    for (const auto& r : res.trace) {
        max_ratio = std::max(max_ratio, r.eval.bound_ratio);
    }
    c.os << "optimize: evaluations=" << res.evaluations
         << " status=" << (res.status == OptimizeStatus::Converged ? "converged" : "budget_exhausted")
         << " objective=" << fmt(res.objective) << " max_bound_ratio=" << fmt(max_ratio) << " theta=";
    for (std::size_t i = 0; i < res.theta.size(); ++i) {
        c.os << (i ? "," : "") << format17(res.theta[i]);
    }
    c.os << "\n";
    return 0;
}

} // namespace detail

inline int run_cli(int argc, char** argv, std::ostream& os = std::cout, std::ostream& es = std::cerr)
{
    CLI::App app{"Viscous approximation of rate-independent systems with history-dependent dissipation"};
    app.require_subcommand(1);
    std::string config_path;
    std::string out_dir;
    std::optional<double> eps;
    std::optional<std::size_t> jobs;
    std::optional<std::uint64_t> seed;
    std::string experiment;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "Scenario file (JSON)")->required();
        sub->add_option("--out", out_dir, "Output directory (overrides the config)");
        sub->add_option("--eps", eps, "Viscosity (overrides the config)");
        sub->add_option("--jobs", jobs, "Maximum concurrent solves");
        sub->add_option("--seed", seed, "Random seed (overrides the config)");
    };
    auto* solve = app.add_subcommand("solve", "Single viscous solve");
    auto* sweep = app.add_subcommand("sweep", "Vanishing-viscosity sweep");
    auto* verify = app.add_subcommand("verify", "Stability experiments");
    auto* optim = app.add_subcommand("optimize", "Load optimization by pattern search");
    for (auto* sub : {solve, sweep, verify, optim}) {
        add_common(sub);
    }
    verify->add_option("experiment", experiment, "Experiment name")
        ->required()
        ->check(CLI::IsMember({"compat", "bounds", "lipschitz", "unique", "dual", "history"}));

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e) {
        const int code = app.exit(e, os, es);
        return code == 0 ? 0 : 2;
    }

    try {
        auto root = detail::read_json(config_path);
        if (!root.is_object()) {
            throw ConfigError("config: top level must be an object");
        }
        if (eps) {
            root["eps"] = *eps;
        }
        if (seed) {
            root["seed"] = *seed;
        }
        Config cfg = parse_config(root);
        if (jobs) {
            if (*jobs == 0) {
                throw ConfigError("--jobs must be positive");
            }
            cfg.jobs = *jobs;
            cfg.control.search.jobs = *jobs;
        }
        const std::filesystem::path out = out_dir.empty() ? cfg.output : out_dir;
        detail::CliContext ctx{std::move(cfg), out, os, es};
        std::filesystem::create_directories(ctx.out);

        try {
            if (solve->parsed()) return detail::cmd_solve(ctx);
            if (sweep->parsed()) return detail::cmd_sweep(ctx);
            if (verify->parsed()) return detail::cmd_verify(ctx, experiment);
            return detail::cmd_optimize(ctx);
        }
        catch (const NumericalFailure& e) {
            es << "error: numerical failure: " << e.what() << " (residual " << detail::fmt(e.residual()) << ")\n";
            return 1;
        }
    }
    catch (const ConfigError& e) {
        es << "error: " << e.what() << "\n";
        return 2;
    }
    catch (const std::invalid_argument& e) {
        es << "error: " << e.what() << "\n";
        return 2;
    }
    catch (const std::exception& e) {
        es << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace hris
