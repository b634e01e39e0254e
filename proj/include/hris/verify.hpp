#pragma once

// Numerical stability experiments: eps-uniform bounds of the viscous
// solution map, Lipschitz stability with respect to the load, uniqueness
// probes, the history Lipschitz estimate, and primal/dual equivalence of the
// inclusion. Constants are measured, never asserted against a value; the
// acceptance checks are boundedness and stability across eps.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "compatibility.hpp"
#include "dissipation.hpp"
#include "history.hpp"
#include "load.hpp"
#include "parallel.hpp"
#include "table.hpp"
#include "trajectory.hpp"
#include "viscous.hpp"

namespace hris {

struct ExperimentConfig {
    Scenario base;
    /// Cap on ||l||_{H^1(0,T;Y*)} for every load in the family.
    double load_cap = 1.0;
    std::vector<double> eps_list{1e-1, 1e-2, 1e-3};
    std::size_t n_loads = 10;
    std::size_t n_pairs = 20;
    std::uint64_t seed = 1;
    RandomLoadFamily family{};
    std::size_t jobs = 1;
    SolveOptions solve{};
    /// Allowed max/min spread of the measured constant across eps.
    double variation_limit = 2.0;
};

namespace detail {

/// Random compatible loads with ||l||_{H^1(0,T;Y*)} = cap * U(0.5, 1).
inline std::vector<std::vector<LoadMode>> random_load_family(const ExperimentConfig& cfg, std::size_t count,
                                                             std::uint64_t salt)
{
    std::mt19937_64 rng(cfg.seed * 0x9E3779B97F4A7C15ull + salt);
    std::uniform_real_distribution<double> frac(0.5, 1.0);
    std::vector<std::vector<LoadMode>> out;
    for (std::size_t i = 0; i < count; ++i) {
        auto modes = random_modes(rng, cfg.family);
        const double target = cfg.load_cap * frac(rng);
        out.push_back(rescale_modes(*cfg.base.mesh, modes, cfg.base.horizon, cfg.base.n_steps, target));
    }
    return out;
}

inline double spread(const std::vector<double>& v)
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (double x : v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

} // namespace detail

struct BoundRow {
    std::size_t load = 0;
    double eps = 0.0;
    double ratio_h1 = 0.0; ///< ||q||_{H^1(0,T;Y)} / ||l||_{H^1(0,T;Y*)}
    double ratio_c = 0.0;  ///< ||q||_{C([0,T];Y)} / ||l||_{W^{1,1}(0,T;Y*)}
    double q_h1 = 0.0;
    double load_h1 = 0.0;
};

struct BoundReport {
    std::vector<BoundRow> rows;
    std::vector<double> eps_list;
    /// Measured constant C(eps) = max over loads of ratio_h1.
    std::vector<double> max_ratio_per_eps;
    /// max/min ratio_h1 across eps for each load; 1 when the response is zero throughout.
    std::vector<double> variation_per_load;
    std::size_t skipped = 0; ///< zero loads (ratio undefined)
    /// max_eps C(eps) / min_eps C(eps)
    double variation = 0.0;
    double max_ratio = 0.0;
    bool pass = false;

    Table table() const
    {
        Table t{{"load", "eps", "ratio_h1", "ratio_c", "q_h1", "load_h1"}, {}};
        for (const auto& r : rows) {
            t.add({double(r.load), r.eps, r.ratio_h1, r.ratio_c, r.q_h1, r.load_h1});
        }
        return t;
    }
};

/// Ratio ||q_eps||_{H^1(0,T;Y)} / ||l||_{H^1(0,T;Y*)} over random compatible
/// loads and the eps list; `loads` overrides the random family when given.
/// Passes when the measured constant C(eps) varies by at most
/// `variation_limit` across eps.
inline BoundReport uniform_bound_experiment(const ExperimentConfig& cfg, const std::vector<Load>* loads = nullptr)
{
    std::vector<Load> family;
    if (loads) {
        family = *loads;
    }
    else {
        for (const auto& modes : detail::random_load_family(cfg, cfg.n_loads, 11)) {
            family.push_back(modal_load(*cfg.base.mesh, modes));
        }
    }
    const Mesh& mesh = *cfg.base.mesh;
    const std::size_t ne = cfg.eps_list.size();
    std::vector<BoundRow> cells(family.size() * ne);
    std::vector<char> skip(family.size(), 0);
    std::vector<double> lh1(family.size()), lw11(family.size());
    for (std::size_t i = 0; i < family.size(); ++i) {
        const auto samples = sample_load(family[i].function(), cfg.base.horizon, cfg.base.n_steps);
        lh1[i] = load_h1_norm(mesh, samples);
        lw11[i] = load_w11_norm(mesh, samples);
        skip[i] = lh1[i] == 0.0;
    }
    parallel_for(cells.size(), cfg.jobs, [&](std::size_t c) {
        const std::size_t i = c / ne;
        const std::size_t e = c % ne;
        BoundRow& row = cells[c];
        row.load = i;
        row.eps = cfg.eps_list[e];
        row.load_h1 = lh1[i];
        if (skip[i]) {
            return;
        }
        Scenario sc = cfg.base;
        sc.load = family[i];
        const auto sol = solve_viscous(sc, row.eps, cfg.solve);
        row.q_h1 = sol.report.trajectory_h1_norm;
        row.ratio_h1 = row.q_h1 / lh1[i];
        row.ratio_c = c_norm(mesh, sol.trajectory) / lw11[i];
    });
    BoundReport rep;
    rep.eps_list = cfg.eps_list;
    rep.max_ratio_per_eps.assign(ne, 0.0);
    bool finite = true;
    for (std::size_t i = 0; i < family.size(); ++i) {
        if (skip[i]) {
            ++rep.skipped;
            continue;
        }
        std::vector<double> ratios;
        for (std::size_t e = 0; e < ne; ++e) {
            const auto& row = cells[i * ne + e];
            rep.rows.push_back(row);
            ratios.push_back(row.ratio_h1);
            rep.max_ratio_per_eps[e] = std::max(rep.max_ratio_per_eps[e], row.ratio_h1);
            rep.max_ratio = std::max(rep.max_ratio, row.ratio_h1);
            finite = finite && std::isfinite(row.ratio_h1);
        }
        const bool silent = std::all_of(ratios.begin(), ratios.end(), [](double r) { return r == 0.0; });
        rep.variation_per_load.push_back(silent ? 1.0 : detail::spread(ratios));
    }
    rep.variation = rep.max_ratio > 0.0 ? detail::spread(rep.max_ratio_per_eps) : 1.0;
    rep.pass = finite && !rep.rows.empty() && rep.variation <= cfg.variation_limit;
    return rep;
}

struct LipschitzRow {
    std::size_t pair = 0;
    double eps = 0.0;
    double state_diff_c = 0.0; ///< ||q1 - q2||_{C([0,T];Y)}
    double load_diff_w11 = 0.0;
    double ratio = 0.0;
};

struct LipschitzReport {
    std::vector<LipschitzRow> rows;
    std::vector<double> eps_list;
    std::vector<double> max_ratio_per_eps; ///< measured Lipschitz constant L(eps)
    double variation = 0.0;                ///< max_eps L / min_eps L
    double max_ratio = 0.0;
    bool pass = false;

    Table table() const
    {
        Table t{{"pair", "eps", "state_diff_c", "load_diff_w11", "ratio"}, {}};
        for (const auto& r : rows) {
            t.add({double(r.pair), r.eps, r.state_diff_c, r.load_diff_w11, r.ratio});
        }
        return t;
    }
};

/// Measured Lipschitz constant of the solution map l -> q in
/// C([0,T];Y) / W^{1,1}(0,T;Y*), per eps, over random load pairs.
inline LipschitzReport lipschitz_experiment(const ExperimentConfig& cfg,
                                            const std::vector<std::pair<Load, Load>>* pairs = nullptr)
{
    if (!cfg.base.dissipation.is_fatigue() || !cfg.base.dissipation.weight_prime) {
        throw std::invalid_argument("lipschitz_experiment: needs the fatigue potential with kappa' supplied");
    }
    std::vector<std::pair<Load, Load>> family;
    if (pairs) {
        family = *pairs;
    }
    else {
        const auto a = detail::random_load_family(cfg, cfg.n_pairs, 23);
        const auto b = detail::random_load_family(cfg, cfg.n_pairs, 29);
        for (std::size_t p = 0; p < cfg.n_pairs; ++p) {
            family.emplace_back(modal_load(*cfg.base.mesh, a[p]), modal_load(*cfg.base.mesh, b[p]));
        }
    }
    const Mesh& mesh = *cfg.base.mesh;
    const std::size_t ne = cfg.eps_list.size();
    std::vector<LipschitzRow> cells(family.size() * ne);
    parallel_for(cells.size(), cfg.jobs, [&](std::size_t c) {
        const std::size_t p = c / ne;
        const std::size_t e = c % ne;
        LipschitzRow& row = cells[c];
        row.pair = p;
        row.eps = cfg.eps_list[e];
        Scenario s1 = cfg.base;
        Scenario s2 = cfg.base;
        s1.load = family[p].first;
        s2.load = family[p].second;
        const auto q1 = solve_viscous(s1, row.eps, cfg.solve);
        const auto q2 = solve_viscous(s2, row.eps, cfg.solve);
        row.state_diff_c = c_distance(mesh, q1.trajectory, q2.trajectory);
        row.load_diff_w11 = load_w11_norm(
            mesh, difference(sample_load(s1.load.function(), s1.horizon, s1.n_steps),
                             sample_load(s2.load.function(), s2.horizon, s2.n_steps)));
        row.ratio = row.load_diff_w11 > 0.0 ? row.state_diff_c / row.load_diff_w11 : 0.0;
    });
    LipschitzReport rep;
    rep.eps_list = cfg.eps_list;
    rep.rows = cells;
    rep.max_ratio_per_eps.assign(ne, 0.0);
    bool finite = true;
    for (const auto& r : cells) {
        finite = finite && std::isfinite(r.ratio);
        const auto e = static_cast<std::size_t>(&r - cells.data()) % ne;
        rep.max_ratio_per_eps[e] = std::max(rep.max_ratio_per_eps[e], r.ratio);
        rep.max_ratio = std::max(rep.max_ratio, r.ratio);
    }
    rep.variation = rep.max_ratio > 0.0 ? detail::spread(rep.max_ratio_per_eps) : 1.0;
    rep.pass = finite && rep.variation <= cfg.variation_limit;
    return rep;
}

struct UniquenessReport {
    std::vector<std::string> variants;
    std::vector<Trajectory> trajectories;
    double gap = 0.0; ///< max pairwise C([0,T];Y) distance, compared on the base grid
};

/// Solves at `eps` with the implicit and explicit integrators, each with
/// warm- and cold-started inner solvers, and returns the largest pairwise
/// gap. The explicit runs use at least ceil(10 T / eps) steps.
inline UniquenessReport uniqueness_probe(const Scenario& sc, double eps, const QpOptions& qp = {}, std::size_t jobs = 1)
{
    struct Variant {
        std::string name;
        Integrator integrator;
        bool warm;
    };
    const std::vector<Variant> variants = {{"implicit_warm", Integrator::Implicit, true},
                                           {"implicit_cold", Integrator::Implicit, false},
                                           {"explicit_warm", Integrator::Explicit, true},
                                           {"explicit_cold", Integrator::Explicit, false}};
    UniquenessReport rep;
    rep.trajectories.resize(variants.size());
    parallel_for(variants.size(), jobs, [&](std::size_t i) {
        Scenario s = sc;
        if (variants[i].integrator == Integrator::Explicit) {
            const auto needed = static_cast<std::size_t>(std::ceil(10.0 * sc.horizon / eps));
            s.n_steps = std::max(sc.n_steps, needed);
        }
        SolveOptions opt;
        opt.integrator = variants[i].integrator;
        opt.warm_start = variants[i].warm;
        opt.qp = qp;
        rep.trajectories[i] = solve_viscous(s, eps, opt).trajectory;
    });
    for (const auto& v : variants) {
        rep.variants.push_back(v.name);
    }
    const Mesh& mesh = *sc.mesh;
    for (std::size_t a = 0; a < variants.size(); ++a) {
        for (std::size_t b = a + 1; b < variants.size(); ++b) {
            for (std::size_t k = 0; k <= sc.n_steps; ++k) {
                const double t = sc.time(k);
                rep.gap = std::max(rep.gap, h1_norm(mesh, rep.trajectories[a].at(t) - rep.trajectories[b].at(t)));
            }
        }
    }
    return rep;
}

struct HistoryLipschitzRow {
    std::size_t s_index = 0;
    std::size_t t_index = 0;
    double slope = 0.0; ///< central difference of s -> R(H(y)(s), y'(t))
    double bound = 0.0; ///< L_R ||d/ds H(y)(s)||_{L^2} ||y'(t)||_{H^1}
    double excess = 0.0;
};

struct HistoryLipschitzReport {
    std::vector<HistoryLipschitzRow> rows;
    std::size_t skipped = 0; ///< samples whose rate left dom R
    double max_excess = -std::numeric_limits<double>::infinity();

    Table table() const
    {
        Table t{{"s_index", "t_index", "slope", "bound", "excess"}, {}};
        for (const auto& r : rows) {
            t.add({double(r.s_index), double(r.t_index), r.slope, r.bound, r.excess});
        }
        return t;
    }
};

/// Finite-difference slope of s -> R(H(y)(s), y'(t)) against the bound
/// L_R ||d/ds H(y)(s)||_X ||y'(t)||_Y at random (s, t) samples.
inline HistoryLipschitzReport history_lipschitz_check(const Trajectory& y, const Scenario& sc, std::size_t n_samples = 50,
                                                      std::uint64_t seed = 3)
{
    const Mesh& mesh = *sc.mesh;
    if (y.size() < 4) {
        throw std::invalid_argument("history_lipschitz_check: trajectory too short");
    }
    const std::size_t N = y.size() - 1;
    std::vector<Field> zeta;
    HistoryAccumulator acc(sc.kernel, y.tau());
    for (const auto& s : y.states()) {
        acc.push(s);
        zeta.push_back(acc.value());
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> s_dist(1, N - 1);
    std::uniform_int_distribution<std::size_t> t_dist(1, N);
    const double LR = sc.dissipation.lipschitz_R();
    HistoryLipschitzReport rep;
    for (std::size_t k = 0; k < n_samples; ++k) {
        const std::size_t s = s_dist(rng);
        const std::size_t t = t_dist(rng);
        const Field rate = y.rate(t);
        if (!in_domain(sc.dissipation, rate)) {
            ++rep.skipped;
            continue;
        }
        HistoryLipschitzRow row;
        row.s_index = s;
        row.t_index = t;
        row.slope = (eval_R(sc.dissipation, zeta[s + 1], rate, mesh).value() -
                     eval_R(sc.dissipation, zeta[s - 1], rate, mesh).value()) /
                    (2.0 * y.tau());
        row.bound = LR * l2_norm(mesh, history_derivative(sc.kernel, y, s)) * h1_norm(mesh, rate);
        row.excess = std::abs(row.slope) - row.bound;
        rep.max_excess = std::max(rep.max_excess, row.excess);
        rep.rows.push_back(row);
    }
    return rep;
}

struct DualEquivalenceReport {
    std::vector<double> times;
    std::vector<double> primal_residuals; ///< energy balance + polar inequality
    std::vector<double> dual_residuals;   ///< normal-cone feasibility + complementarity
    double max_primal = 0.0;
    double max_dual = 0.0;
    double max_residual() const { return std::max(max_primal, max_dual); }

    Table table() const
    {
        Table t{{"t", "primal_residual", "dual_residual"}, {}};
        for (std::size_t k = 0; k < times.size(); ++k) {
            t.add({times[k], primal_residuals[k], dual_residuals[k]});
        }
        return t;
    }
};

/// Along a solved trajectory, evaluates at each t_{n+1} with the history
/// H(q)(t_{n+1}) (not the frozen start-of-step value) and the driving force
/// phi = -dE(t_{n+1}, q_{n+1}) - eps V q':
///   primal: |<phi, q'> - R(zeta, q')| and max_i (phi_i - threshold_i)_+,
///   dual:   Fatigue  q' in N_{C°}(phi - M kappa(zeta)): slack s = M kappa - phi >= 0,
///           q'_i s_i = 0;
///           WeightedL1  q' in N_{K(zeta)}(phi): |phi_i| <= w_i g_i and
///           |q'_i| w_i g_i - q'_i phi_i = 0.
inline DualEquivalenceReport dual_equivalence(const Scenario& sc, double eps, const SolveOptions& opt = {})
{
    const Mesh& mesh = *sc.mesh;
    if (mesh.n_nodes() > 4) {
        throw std::invalid_argument("dual_equivalence: intended for meshes with at most 4 nodes");
    }
    const auto sol = solve_viscous(sc, eps, opt);
    const Trajectory& q = sol.trajectory;
    HistoryAccumulator acc(sc.kernel, q.tau());
    acc.push(q.state(0));
    DualEquivalenceReport rep;
    const bool fatigue = sc.dissipation.is_fatigue();
    for (std::size_t k = 1; k < q.size(); ++k) {
        acc.push(q.state(k));
        const Field& zeta = acc.value();
        const Field rate = q.rate(k);
        const double t = q.time(k);
        const DualField phi = neg_energy_gradient(sc, t, q.state(k)) - eps * riesz_apply(mesh, rate);
        const DualField thr = threshold(sc.dissipation, zeta, mesh);

        const Extended R = eval_R(sc.dissipation, zeta, rate, mesh);
        double primal = R.is_finite() ? std::abs(pair(phi, rate) - R.value()) : std::numeric_limits<double>::infinity();
        double dual = 0.0;
        for (std::size_t i = 0; i < mesh.n_nodes(); ++i) {
            if (fatigue) {
                const double slack = thr[i] - phi[i];
                primal = std::max(primal, -slack);
                dual = std::max({dual, -slack, std::abs(rate[i] * slack)});
            }
            else {
                const double slack = thr[i] - std::abs(phi[i]);
                primal = std::max(primal, -slack);
                dual = std::max({dual, -slack, std::abs(std::abs(rate[i]) * thr[i] - rate[i] * phi[i])});
            }
        }
        rep.times.push_back(t);
        rep.primal_residuals.push_back(primal);
        rep.dual_residuals.push_back(dual);
        rep.max_primal = std::max(rep.max_primal, primal);
        rep.max_dual = std::max(rep.max_dual, dual);
    }
    return rep;
}

/// Least-squares slope of log(residual) against log(tau).
inline double empirical_order(const std::vector<double>& taus, const std::vector<double>& residuals)
{
    if (taus.size() != residuals.size() || taus.size() < 2) {
        throw std::invalid_argument("empirical_order: need at least two matching samples");
    }
    double mx = 0.0, my = 0.0;
    const double n = static_cast<double>(taus.size());
    for (std::size_t i = 0; i < taus.size(); ++i) {
        mx += std::log(taus[i]) / n;
        my += std::log(residuals[i]) / n;
    }
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < taus.size(); ++i) {
        const double dx = std::log(taus[i]) - mx;
        sxy += dx * (std::log(residuals[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

} // namespace hris
