#pragma once

// Vanishing-viscosity driver: viscous solves along a decreasing eps schedule,
// Cauchy evidence between consecutive levels, and a certificate that the
// finest trajectory satisfies the rate-independent stability inequality and
// energy balance.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "compatibility.hpp"
#include "dissipation.hpp"
#include "history.hpp"
#include "parallel.hpp"
#include "trajectory.hpp"
#include "viscous.hpp"

namespace hris {

/// eps_k = eps0 * 2^{-k}, k = 0..levels-1
inline std::vector<double> geometric_schedule(double eps0 = 0.1, std::size_t levels = 8)
{
    if (!(eps0 > 0.0) || levels == 0) {
        throw std::invalid_argument("geometric_schedule: eps0 and levels must be positive");
    }
    std::vector<double> s(levels);
    for (std::size_t k = 0; k < levels; ++k) {
        s[k] = eps0 * std::ldexp(1.0, -static_cast<int>(k));
    }
    return s;
}

struct LimitCertificate {
    std::vector<double> times;
    std::vector<double> stability_violations; ///< max_eta <-dE, eta> - R(H(q), eta), eta admissible, ||eta||_Y = 1
    std::vector<double> balance_residuals;    ///< |<-dE, q'> - R(H(q), q')|
    double stability_scale = 1.0;
    double balance_scale = 1.0;
    double tolerance = 0.0;
    bool pass = false;

    double max_stability_violation() const
    {
        return stability_violations.empty() ? 0.0
                                            : *std::max_element(stability_violations.begin(), stability_violations.end());
    }
    double max_balance_residual() const
    {
        return balance_residuals.empty() ? 0.0 : *std::max_element(balance_residuals.begin(), balance_residuals.end());
    }
};

/// Checks the rate-independent stability inequality and energy balance at
/// up to `n_times` evenly spaced grid points, with `n_test_dirs` random
/// admissible directions plus the nodal extreme rays. Residuals are compared
/// against tolerance * scale, scale = max(1, sup ||l||_{Y*}) for the
/// inequality and additionally * max(1, sup ||q'||_Y) for the balance.
inline LimitCertificate certify_limit(const Trajectory& q, const Scenario& sc, std::size_t n_test_dirs,
                                      double tolerance, std::size_t n_times = 200, std::uint64_t seed = 7)
{
    const Mesh& mesh = *sc.mesh;
    const std::size_t n = mesh.n_nodes();
    if (q.size() < 2) {
        throw std::invalid_argument("certify_limit: trajectory too short");
    }
    const std::size_t N = q.size() - 1;
    std::vector<Field> zeta;
    zeta.reserve(q.size());
    HistoryAccumulator acc(sc.kernel, q.tau());
    for (const auto& s : q.states()) {
        acc.push(s);
        zeta.push_back(acc.value());
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(sc.dissipation.is_fatigue() ? 0.0 : -1.0, 1.0);
    std::vector<Field> dirs;
    for (std::size_t i = 0; i < n; ++i) {
        Field e = Field::zero(n);
        e[i] = 1.0;
        dirs.push_back(e);
        if (!sc.dissipation.is_fatigue()) {
            dirs.push_back(-e);
        }
    }
    for (std::size_t d = 0; d < n_test_dirs; ++d) {
        Field v = Field::zero(n);
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = u(rng);
        }
        if (v.values.norm() > 0.0) {
            dirs.push_back(v);
        }
    }
    for (auto& d : dirs) {
        d = (1.0 / h1_norm(mesh, d)) * d;
    }

    LimitCertificate cert;
    cert.tolerance = tolerance;
    double max_load = 0.0;
    double max_rate = 0.0;
    const std::size_t stride = std::max<std::size_t>(1, N / std::max<std::size_t>(1, n_times));
    for (std::size_t k = 1; k <= N; k += stride) {
        const double t = q.time(k);
        const DualField omega = neg_energy_gradient(sc, t, q.state(k));
        const Field rate = q.rate(k);
        double worst = 0.0;
        for (const auto& v : dirs) {
            worst = std::max(worst, pair(omega, v) - eval_R(sc.dissipation, zeta[k], v, mesh).value());
        }
        const Extended R = eval_R(sc.dissipation, zeta[k], rate, mesh);
        const double balance =
            R.is_finite() ? std::abs(pair(omega, rate) - R.value()) : std::numeric_limits<double>::infinity();
        cert.times.push_back(t);
        cert.stability_violations.push_back(worst);
        cert.balance_residuals.push_back(balance);
        max_load = std::max(max_load, dual_norm(mesh, sc.load(t)));
        max_rate = std::max(max_rate, h1_norm(mesh, rate));
    }
    cert.stability_scale = std::max(1.0, max_load);
    cert.balance_scale = cert.stability_scale * std::max(1.0, max_rate);
    cert.pass = cert.max_stability_violation() <= tolerance * cert.stability_scale &&
                cert.max_balance_residual() <= tolerance * cert.balance_scale;
    return cert;
}

struct VVResult {
    std::vector<double> eps_schedule;
    std::vector<Trajectory> trajectories;
    std::vector<SolveReport> reports;
    std::vector<double> cauchy_diffs_h1; ///< ||q_k - q_{k+1}||_{H^1(0,T;Y)}
    std::vector<double> cauchy_diffs_c;  ///< ||q_k - q_{k+1}||_{C([0,T];Y)}
    LimitCertificate certification;
    CompatibilityReport compatibility;
    std::string warning;

    const Trajectory& limit() const { return trajectories.back(); }

    /// diffs[k+1] / diffs[k] in the C([0,T];Y) norm; NaN when a diff vanishes.
    std::vector<double> cauchy_ratios() const
    {
        std::vector<double> r;
        for (std::size_t k = 1; k < cauchy_diffs_c.size(); ++k) {
            r.push_back(cauchy_diffs_c[k - 1] > 0.0 ? cauchy_diffs_c[k] / cauchy_diffs_c[k - 1]
                                                    : std::numeric_limits<double>::quiet_NaN());
        }
        return r;
    }
};

struct SweepOptions {
    SolveOptions solve{};
    std::size_t jobs = 1;
    std::size_t certificate_dirs = 20;
    double certificate_tolerance = 1e-2;
};

inline VVResult vv_sweep(const Scenario& sc, const std::vector<double>& schedule, const SweepOptions& opt = {})
{
    if (schedule.empty()) {
        throw std::invalid_argument("vv_sweep: empty schedule");
    }
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        if (!(schedule[k] > 0.0) || (k > 0 && !(schedule[k] < schedule[k - 1]))) {
            throw std::invalid_argument("vv_sweep: schedule must be positive and strictly decreasing");
        }
    }
    VVResult res;
    res.eps_schedule = schedule;
    res.compatibility = compatibility_check(sc);
    if (!res.compatibility.compatible) {
        res.warning = "load violates the compatibility condition l(0) in d_2 R(y0, 0) at " +
                      std::to_string(res.compatibility.violating_nodes.size()) + " node(s)";
    }
    std::vector<ViscousSolution> sols(schedule.size());
    parallel_for(schedule.size(), opt.jobs, [&](std::size_t k) { sols[k] = solve_viscous(sc, schedule[k], opt.solve); });
    for (auto& s : sols) {
        res.trajectories.push_back(std::move(s.trajectory));
        res.reports.push_back(std::move(s.report));
    }
    const Mesh& mesh = *sc.mesh;
    for (std::size_t k = 0; k + 1 < schedule.size(); ++k) {
        res.cauchy_diffs_h1.push_back(h1_time_distance(mesh, res.trajectories[k], res.trajectories[k + 1]));
        res.cauchy_diffs_c.push_back(c_distance(mesh, res.trajectories[k], res.trajectories[k + 1]));
    }
    res.certification = certify_limit(res.limit(), sc, opt.certificate_dirs, opt.certificate_tolerance);
    return res;
}

/// Time reparametrization phi : [0, horizon] -> [0, T], phi(0) = 0, strictly increasing.
struct Reparametrization {
    double horizon = 1.0;
    ScalarFunction map;
};

/// Solves the scenario and its reparametrized version (load l o phi on
/// [0, phi.horizon], same step count) and returns
/// sup_s ||q~(s) - q(phi(s))||_{H^1}, with q interpolated linearly in time.
inline double check_rate_independence(const Scenario& sc, const Reparametrization& phi, double eps,
                                      const SolveOptions& opt = {})
{
    if (!phi.map || !(phi.horizon > 0.0)) {
        throw std::invalid_argument("check_rate_independence: reparametrization missing");
    }
    if (std::abs(phi.map(0.0)) > 1e-12) {
        throw std::invalid_argument("check_rate_independence: phi(0) must be 0");
    }
    const std::size_t probes = 10 * sc.n_steps;
    double prev = phi.map(0.0);
    for (std::size_t k = 1; k <= probes; ++k) {
        const double v = phi.map(phi.horizon * static_cast<double>(k) / static_cast<double>(probes));
        if (!(v > prev)) {
            throw std::invalid_argument("check_rate_independence: phi must be strictly increasing");
        }
        prev = v;
    }
    if (prev > sc.horizon * (1.0 + 1e-12)) {
        throw std::invalid_argument("check_rate_independence: phi maps beyond the horizon");
    }
    Scenario rs = sc;
    rs.horizon = phi.horizon;
    rs.load = reparametrized(sc.load, phi.map);
    const auto original = solve_viscous(sc, eps, opt);
    const auto rescaled = solve_viscous(rs, eps, opt);
    double worst = 0.0;
    for (std::size_t k = 0; k < rescaled.trajectory.size(); ++k) {
        const double s = rescaled.trajectory.time(k);
        const Field diff = rescaled.trajectory.state(k) - original.trajectory.at(phi.map(s));
        worst = std::max(worst, h1_norm(*sc.mesh, diff));
    }
    return worst;
}

} // namespace hris
