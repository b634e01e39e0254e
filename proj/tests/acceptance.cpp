// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <hris/config.hpp>

#include "support.hpp"

using namespace hris;
namespace fs = std::filesystem;

namespace {

std::string sci(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Balance {
    double balance = 0.0;
    double polar = 0.0;
    std::size_t solves = 0;

    void record(const SolveReport& r)
    {
        balance = std::max(balance, r.max_balance_residual());
        polar = std::max(polar, r.max_polar_violation());
        ++solves;
    }
};

Balance g_balance;

ViscousSolution solve(const Scenario& sc, double eps)
{
    auto sol = solve_viscous(sc, eps);
    g_balance.record(sol.report);
    return sol;
}

Outcome scalar_oracle()
{
    const auto load = test::two_sin_pi();
    auto sc = test::scalar_scenario(load, DissipationSpec::fatigue(constant_function(1.0), 0.0), 10000);
    const auto sol = solve(sc, 1e-4);
    double err = 0.0;
    for (std::size_t k = 0; k <= sc.n_steps; k += 50) {
        const double t = sc.time(k);
        err = std::max(err, std::abs(sol.trajectory.state(k)[0] - test::running_max_oracle(load, 1.0, 1.0, t)));
    }
    return {err <= 1e-2, "sup |q - running max| = " + sci(err) + " (tol 1e-2, eps = tau = 1e-4)"};
}

Outcome linear_ode()
{
    const auto diss = DissipationSpec::fatigue(constant_function(0.0), 0.0);
    double worst = 0.0;
    for (double eps : {0.1, 0.01}) {
        auto sc = test::scalar_scenario([](double t) { return t; }, diss, 10000);
        const auto sol = solve(sc, eps);
        for (std::size_t k = 0; k <= sc.n_steps; k += 100) {
            const double t = sc.time(k);
            const double exact = t - eps * (1.0 - std::exp(-t / eps));
            worst = std::max(worst, std::abs(sol.trajectory.state(k)[0] - exact));
        }
    }
    return {worst <= 5e-3, "max |q - closed form| = " + sci(worst) + " over eps in {0.1, 0.01} (tol 5e-3)"};
}

Outcome energy_identities()
{
    for (std::uint64_t seed : {1u, 2u}) {
        Scenario sc;
        sc.mesh = test::unit_mesh(16);
        sc.n_steps = 400;
        sc.kernel = KernelSpec::identity(Field::zero(16));
        sc.dissipation = seed == 1 ? test::default_fatigue() : test::default_weighted_l1();
        std::mt19937_64 rng(seed);
        sc.load = scaled(modal_load(*sc.mesh, rescale_modes(*sc.mesh, random_modes(rng, {}), 1.0, 400, 1.0)), 3.0);
        for (double eps : {0.1, 1e-3}) {
            solve(sc, eps);
        }
    }
    const bool ok = g_balance.balance <= 1e-8 && g_balance.polar <= 1e-8;
    return {ok, "max balance residual " + sci(g_balance.balance) + ", max polar violation " + sci(g_balance.polar) +
                    " over " + std::to_string(g_balance.solves) + " solves (tol 1e-8)"};
}

ExperimentConfig fatigue_experiment()
{
    return experiment_config(load_config(std::string(HRIS_SCENARIO_DIR) + "/fatigue.json"));
}

Outcome uniform_bound()
{
    auto cfg = fatigue_experiment();
    cfg.eps_list = {1e-1, 1e-2, 1e-3, 1e-4};
    cfg.n_loads = 10;
    const auto rep = uniform_bound_experiment(cfg);
    std::string per;
    for (double c : rep.max_ratio_per_eps) per += (per.empty() ? "" : ",") + sci(c);
    return {rep.pass && rep.variation <= 2.0,
            "C(eps) = [" + per + "], max/min = " + sci(rep.variation) + " (limit 2), " +
                std::to_string(rep.rows.size()) + " rows"};
}

Outcome lipschitz_and_uniqueness()
{
    auto cfg = fatigue_experiment();
    cfg.base.n_steps = 1000;
    cfg.eps_list = {1e-1, 1e-2, 1e-3};
    cfg.n_pairs = 20;
    const auto rep = lipschitz_experiment(cfg);
    auto sc = test::scalar_scenario(test::two_sin_pi(), DissipationSpec::fatigue(constant_function(1.0), 0.0), 10000);
    const double gap = uniqueness_probe(sc, 1e-4).gap;
    return {rep.pass && rep.variation <= 2.0 && gap <= 3e-2,
            "L(eps) max/min = " + sci(rep.variation) + " (limit 2) over 20 pairs, uniqueness gap " + sci(gap) +
                " (tol 3e-2)"};
}

Field admissible(std::mt19937_64& rng, const DissipationSpec& spec, std::size_t n)
{
    return test::random_field(rng, n, spec.is_fatigue() ? 0.0 : -2.0, 2.0);
}

std::vector<DissipationSpec> catalog()
{
    return {test::default_fatigue(),
            DissipationSpec::fatigue([](double z) { return std::max(0.2, 1.0 - 0.5 * z); }, 0.5),
            test::default_weighted_l1()};
}

Outcome potential_axioms()
{
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> gamma(0.0, 10.0);
    const Mesh mesh(7, 1.0);
    const auto specs = catalog();
    int homog_fail = 0;
    double worst_homog = 0.0;
    double worst_lip = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < 500; ++k) {
        const auto& spec = specs[k % specs.size()];
        const Field z = test::random_field(rng, 7, -3, 3);
        const Field eta = admissible(rng, spec, 7);
        const double g = gamma(rng);
        if (!check_homogeneity(spec, z, eta, g, mesh)) ++homog_fail;
        const double lhs = eval_R(spec, z, g * eta, mesh).value();
        const double rhs = g * eval_R(spec, z, eta, mesh).value();
        worst_homog = std::max(worst_homog, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
    }
    for (int k = 0; k < 500; ++k) {
        const auto& spec = specs[k % specs.size()];
        const Field z1 = test::random_field(rng, 7, -3, 3);
        const Field z2 = (k % 5 == 0) ? z1 + test::random_field(rng, 7, -1e-3, 1e-3) : test::random_field(rng, 7, -3, 3);
        worst_lip = std::max(worst_lip, check_lipschitz_axiom(spec, z1, z2, admissible(rng, spec, 7),
                                                              admissible(rng, spec, 7), mesh));
    }
    return {homog_fail == 0 && worst_homog <= 1e-12 && worst_lip <= 1e-10,
            "homogeneity 500 cases, worst relative " + sci(worst_homog) + " (tol 1e-12); four-point excess " +
                sci(worst_lip) + " over 500 cases (tol 1e-10)"};
}

/// Exhaustive active-set solve of min eps/2 x'Vx - <f, x> + R(zeta, x).
std::optional<Vector> brute_force_prox(const DissipationSpec& spec, const Field& zeta, const DualField& f, double eps,
                                       const Mesh& mesh)
{
    const std::size_t n = mesh.n_nodes();
    const Vector t = threshold(spec, zeta, mesh).values;
    const Matrix H = eps * mesh.riesz();
    const int states = spec.is_fatigue() ? 2 : 3;
    std::size_t patterns = 1;
    for (std::size_t i = 0; i < n; ++i) patterns *= static_cast<std::size_t>(states);
    for (std::size_t p = 0; p < patterns; ++p) {
        std::vector<int> sign(n);
        std::size_t code = p;
        for (std::size_t i = 0; i < n; ++i) {
            const int s = static_cast<int>(code % states);
            code /= states;
            sign[i] = spec.is_fatigue() ? s : s - 1;
        }
        std::vector<Eigen::Index> free;
        for (std::size_t i = 0; i < n; ++i) {
            if (sign[i] != 0) free.push_back(static_cast<Eigen::Index>(i));
        }
        Vector x = Vector::Zero(static_cast<Eigen::Index>(n));
        if (!free.empty()) {
            const auto m = static_cast<Eigen::Index>(free.size());
            Matrix Hf(m, m);
            Vector rhs(m);
            for (Eigen::Index a = 0; a < m; ++a) {
                rhs(a) = f.values(free[a]) - sign[free[a]] * t(free[a]);
                for (Eigen::Index b = 0; b < m; ++b) Hf(a, b) = H(free[a], free[b]);
            }
            const Vector xf = Hf.ldlt().solve(rhs);
            for (Eigen::Index a = 0; a < m; ++a) x(free[a]) = xf(a);
        }
        const Vector g = f.values - H * x;
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            ok = sign[i] != 0 ? x(ii) * sign[i] > 0.0
                              : (spec.is_fatigue() ? g(ii) <= t(ii) + 1e-13 : std::abs(g(ii)) <= t(ii) + 1e-13);
        }
        if (ok) return x;
    }
    return std::nullopt;
}

Outcome prox_and_projection()
{
    std::mt19937_64 rng(102);
    double worst_proj = 0.0;
    const Mesh m8(8, 1.0);
    for (const auto& spec : catalog()) {
        for (double eps : {1.0, 1e-2}) {
            for (int k = 0; k < 20; ++k) {
                const Field z = test::random_field(rng, 8, -2, 2);
                const DualField w = test::random_dual(rng, 8, -1, 1);
                const Field via_projection = (1.0 / eps) * riesz_solve(m8, w - project_subdiff_zero(spec, z, w, m8));
                const Field via_prox = prox_rate(spec, z, w, eps, m8).rate;
                worst_proj = std::max(worst_proj, eps * (via_projection - via_prox).values.lpNorm<Eigen::Infinity>());
            }
        }
    }
    double worst_brute = 0.0;
    const Mesh m3(3, 1.0);
    for (const auto& spec : {test::default_fatigue(), test::default_weighted_l1()}) {
        for (int k = 0; k < 100; ++k) {
            const Field z = test::random_field(rng, 3, -2, 2);
            const DualField f = test::random_dual(rng, 3, -1, 1);
            const double eps = (k % 2) ? 1.0 : 0.05;
            const auto ref = brute_force_prox(spec, z, f, eps, m3);
            const double d = ref ? (*ref - prox_rate(spec, z, f, eps, m3).rate.values).lpNorm<Eigen::Infinity>()
                                 : std::numeric_limits<double>::infinity();
            worst_brute = std::max(worst_brute, d);
        }
    }
    return {worst_proj <= 1e-8 && worst_brute <= 1e-9,
            "prox vs projection at n = 8: " + sci(worst_proj) + " (tol 1e-8); brute force at n = 3: " +
                sci(worst_brute) + " (tol 1e-9)"};
}

Scenario three_dof(const DissipationSpec& diss, std::size_t steps)
{
    Scenario sc;
    sc.mesh = test::unit_mesh(3);
    sc.n_steps = steps;
    sc.kernel = KernelSpec::identity(Field::zero(3));
    sc.dissipation = diss;
    sc.load = modal_load(*sc.mesh, {{1.5, 1.0, 0}, {0.7, 2.0, 1}, {0.4, 1.3, 2}});
    return sc;
}

Outcome dual_formulation()
{
    std::mt19937_64 rng(103);
    const Mesh mesh(3, 1.0);
    bool conj_ok = true;
    double conj_res = 0.0;
    for (const auto& spec : {test::default_fatigue(), test::default_weighted_l1()}) {
        for (int k = 0; k < 10; ++k) {
            const Field z = test::random_field(rng, 3, -1, 1);
            const DualField t = threshold(spec, z, mesh);
            const auto inside = conjugate_check(spec, z, DualField(0.8 * t.values), mesh, 200, 1 + k);
            conj_ok = conj_ok && inside.match() && !inside.numeric_unbounded;
            conj_res = std::max(conj_res, inside.residual);
            DualField w(0.5 * t.values);
            w[k % 3] = 1.05 * t[k % 3];
            const auto out = conjugate_check(spec, z, w, mesh, 200, 100 + k);
            conj_ok = conj_ok && out.match() && out.numeric_unbounded;
        }
    }
    double worst = 0.0;
    double min_order = std::numeric_limits<double>::infinity();
    for (const auto& diss : {test::default_fatigue(), test::default_weighted_l1()}) {
        worst = std::max(worst, dual_equivalence(three_dof(diss, 400000), 1e-3).max_residual());
        std::vector<double> taus, res;
        for (std::size_t steps : {200u, 400u, 800u, 1600u}) {
            const auto sc = three_dof(diss, steps);
            taus.push_back(sc.tau());
            res.push_back(dual_equivalence(sc, 1e-3).max_residual());
        }
        min_order = std::min(min_order, empirical_order(taus, res));
    }
    return {conj_ok && conj_res <= 1e-6 && worst <= 1e-6 && min_order >= 0.9,
            "conjugate classes agree (residual " + sci(conj_res) + "); primal/dual residual " + sci(worst) +
                " at tau = 2.5e-6 (tol 1e-6); observed order " + sci(min_order)};
}

Outcome rate_independence()
{
    auto sc = test::scalar_scenario(test::two_sin_pi(), DissipationSpec::fatigue(constant_function(1.0), 0.0), 4000);
    const Reparametrization square{1.0, [](double s) { return s * s; }};
    const double small = check_rate_independence(sc, square, 1e-4);
    const double large = check_rate_independence(sc, square, 0.1);
    return {small <= 2e-2 && large > 2e-2,
            "phi(s) = s^2: discrepancy " + sci(small) + " at eps = 1e-4 (tol 2e-2), " + sci(large) +
                " at eps = 0.1 (expected above 2e-2)"};
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

Outcome reproducibility()
{
    const fs::path root = fs::temp_directory_path() / "hris_acceptance_repro";
    fs::remove_all(root);
    const std::string cfg = std::string(HRIS_SCENARIO_DIR) + "/fatigue.json";
    std::size_t compared = 0;
    bool same = true;
    for (const std::string cmd : {"solve", "verify bounds"}) {
        for (const char* run : {"a", "b"}) {
            const std::string line = std::string(HRIS_CLI_PATH) + " " + cmd + " --config " + cfg + " --out " +
                                     (root / run).string() + " --seed 5 --jobs 2 > /dev/null";
            if (std::system(line.c_str()) != 0) {
                return {false, "command failed: " + line};
            }
        }
    }
    for (const auto& entry : fs::directory_iterator(root / "a")) {
        const auto other = root / "b" / entry.path().filename();
        same = same && fs::exists(other) && slurp(entry.path()) == slurp(other);
        ++compared;
    }
    fs::remove_all(root);
    return {same && compared > 0, std::to_string(compared) + " CSV files byte-identical across two runs"};
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"scalar threshold oracle", scalar_oracle},
        {"linear viscous ODE", linear_ode},
        {"energy identities", energy_identities},
        {"uniform bound", uniform_bound},
        {"Lipschitz dependence and uniqueness", lipschitz_and_uniqueness},
        {"potential axioms", potential_axioms},
        {"prox and projection", prox_and_projection},
        {"dual formulation", dual_formulation},
        {"rate independence", rate_independence},
        {"reproducibility", reproducibility},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        }
        catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!o.pass) ++failures;
        std::printf("%s %2zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
