#pragma once

// Tracking-type optimal control over loads l_theta(t, x) = sum theta_{jk}
// psi_j(t) phi_k(x) with psi_j(t) = (t/T)^{j+1} and phi_k(x) = cos(k pi x / L),
// minimized by a compass pattern search. Every l_theta vanishes at t = 0 and
// is therefore compatible.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "load.hpp"
#include "parallel.hpp"
#include "table.hpp"
#include "trajectory.hpp"
#include "viscous.hpp"

namespace hris {

struct ControlProblem {
    /// Mesh, alpha, kernel, dissipation and time grid; the load is replaced by l_theta.
    Scenario base;
    /// Tracking target for (1/2) int_0^T ||q - target||_{L^2}^2 dt; zero when absent.
    std::optional<Trajectory> target;
    /// Terminal target: adds (1/2) ||q(T) - terminal||_{L^2}^2.
    std::optional<Field> terminal;
    std::size_t n_time = 1;
    std::size_t n_space = 1;
    double regularization = 1.0;
    double eps = 1e-3;
    SolveOptions solve{};

    std::size_t dimension() const { return n_time * n_space; }
};

inline Load control_load(const ControlProblem& p, const std::vector<double>& theta)
{
    if (theta.size() != p.dimension()) {
        throw std::invalid_argument("control_load: theta has " + std::to_string(theta.size()) + " entries, expected " +
                                    std::to_string(p.dimension()));
    }
    const Mesh& mesh = *p.base.mesh;
    const std::size_t n = mesh.n_nodes();
    std::vector<DualField> shapes;
    for (std::size_t k = 0; k < p.n_space; ++k) {
        Field phi = Field::zero(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = mesh.node_coords()(static_cast<Eigen::Index>(i));
            phi[i] = std::cos(static_cast<double>(k) * std::numbers::pi * x / mesh.length());
        }
        shapes.push_back(assemble(mesh, phi));
    }
    const double T = p.base.horizon;
    const std::size_t nt = p.n_time;
    return Load([shapes = std::move(shapes), theta, T, nt, n](double t) {
        DualField out = DualField::zero(n);
        for (std::size_t j = 0; j < nt; ++j) {
            const double psi = std::pow(t / T, static_cast<double>(j + 1));
            for (std::size_t k = 0; k < shapes.size(); ++k) {
                out += (theta[j * shapes.size() + k] * psi) * shapes[k];
            }
        }
        return out;
    });
}

struct Evaluation {
    double value = 0.0;
    double tracking = 0.0;
    double regularization = 0.0;
    /// ||q||_{H^1(0,T;Y)} / ||l||_{H^1(0,T;Y*)}; 0 for the zero load.
    double bound_ratio = 0.0;
    bool failed = false;
};

inline Evaluation evaluate_objective(const ControlProblem& p, const std::vector<double>& theta)
{
    for (double v : theta) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("objective: theta must be finite");
        }
    }
    const Mesh& mesh = *p.base.mesh;
    Scenario sc = p.base;
    sc.load = control_load(p, theta);
    const auto samples = sample_load(sc.load.function(), sc.horizon, sc.n_steps);
    Evaluation ev;
    ev.regularization = 0.5 * p.regularization * std::pow(load_h1_l2_norm(mesh, samples), 2);
    ViscousSolution sol;
    try {
        sol = solve_viscous(sc, p.eps, p.solve);
    }
    catch (const NumericalFailure&) {
        ev.failed = true;
        ev.value = std::numeric_limits<double>::infinity();
        return ev;
    }
    const Trajectory& q = sol.trajectory;
    const std::size_t N = q.size() - 1;
    double integral = 0.0;
    for (std::size_t k = 0; k <= N; ++k) {
        const Field d = p.target ? q.state(k) - p.target->at(q.time(k)) : q.state(k);
        const double w = (k == 0 || k == N) ? 0.5 : 1.0;
        integral += w * q.tau() * std::pow(l2_norm(mesh, d), 2);
    }
    ev.tracking = 0.5 * integral;
    if (p.terminal) {
        ev.tracking += 0.5 * std::pow(l2_norm(mesh, q.state(N) - *p.terminal), 2);
    }
    const double lnorm = load_h1_norm(mesh, samples);
    ev.bound_ratio = lnorm > 0.0 ? sol.report.trajectory_h1_norm / lnorm : 0.0;
    ev.value = ev.tracking + ev.regularization;
    return ev;
}

inline double objective(const ControlProblem& p, const std::vector<double>& theta)
{
    return evaluate_objective(p, theta).value;
}

struct OptimizeOptions {
    std::size_t budget = 200;
    double initial_step = 1.0;
    double min_step = 1e-4;
    std::vector<double> theta0; ///< empty: start at zero
    std::uint64_t seed = 1;
    std::size_t jobs = 1;
};

struct TraceRow {
    std::size_t evaluation = 0;
    std::size_t iteration = 0;
    bool accepted = false;
    double step = 0.0;
    std::vector<double> theta;
    Evaluation eval;
};

enum class OptimizeStatus { Converged, BudgetExhausted };

struct OptimizeResult {
    std::vector<double> theta;
    double objective = 0.0;
    std::size_t evaluations = 0;
    OptimizeStatus status = OptimizeStatus::BudgetExhausted;
    std::vector<TraceRow> trace;
    /// Objective at each accepted iterate, starting with the initial point.
    std::vector<double> accepted_history;

    Table table() const
    {
        const std::size_t m = theta.size();
        Table t{{"evaluation", "iteration", "accepted", "step", "objective", "tracking", "regularization",
                 "bound_ratio", "failed"},
                {}};
        for (std::size_t i = 0; i < m; ++i) {
            t.columns.push_back("theta_" + std::to_string(i));
        }
        for (const auto& r : trace) {
            std::vector<double> row{double(r.evaluation), double(r.iteration), r.accepted ? 1.0 : 0.0,
                                    r.step,               r.eval.value,        r.eval.tracking,
                                    r.eval.regularization, r.eval.bound_ratio, r.eval.failed ? 1.0 : 0.0};
            row.insert(row.end(), r.theta.begin(), r.theta.end());
            t.add(std::move(row));
        }
        return t;
    }
};

/// Compass search: poll theta +- step e_i in a seeded random order, move to
/// the best improving poll point, halve the step when none improves. Poll
/// points of one iteration are evaluated concurrently; results do not depend
/// on the job count.
inline OptimizeResult optimize(const ControlProblem& p, const OptimizeOptions& opt = {})
{
    const std::size_t m = p.dimension();
    if (m == 0) {
        throw std::invalid_argument("optimize: empty parametrization");
    }
    if (!(opt.initial_step > 0.0) || !(opt.min_step > 0.0) || opt.budget == 0) {
        throw std::invalid_argument("optimize: step sizes and budget must be positive");
    }
    std::vector<double> theta = opt.theta0.empty() ? std::vector<double>(m, 0.0) : opt.theta0;
    if (theta.size() != m) {
        throw std::invalid_argument("optimize: theta0 has the wrong dimension");
    }
    std::mt19937_64 rng(opt.seed);
    OptimizeResult res;
    Evaluation current = evaluate_objective(p, theta);
    res.trace.push_back({0, 0, true, opt.initial_step, theta, current});
    res.accepted_history.push_back(current.value);
    res.evaluations = 1;
    double step = opt.initial_step;
    std::size_t iteration = 0;
    while (true) {
        if (step < opt.min_step) {
            res.status = OptimizeStatus::Converged;
            break;
        }
        if (res.evaluations >= opt.budget) {
            res.status = OptimizeStatus::BudgetExhausted;
            break;
        }
        ++iteration;
        std::vector<std::vector<double>> polls;
        for (std::size_t i = 0; i < m; ++i) {
            for (double sign : {1.0, -1.0}) {
                auto c = theta;
                c[i] += sign * step;
                polls.push_back(std::move(c));
            }
        }
        std::shuffle(polls.begin(), polls.end(), rng);
        polls.resize(std::min(polls.size(), opt.budget - res.evaluations));
        std::vector<Evaluation> evals(polls.size());
        parallel_for(polls.size(), opt.jobs, [&](std::size_t i) { evals[i] = evaluate_objective(p, polls[i]); });

        std::size_t best = polls.size();
        double best_value = current.value;
        for (std::size_t i = 0; i < polls.size(); ++i) {
            if (evals[i].value < best_value) {
                best = i;
                best_value = evals[i].value;
            }
        }
        for (std::size_t i = 0; i < polls.size(); ++i) {
            res.trace.push_back({res.evaluations + i, iteration, i == best, step, polls[i], evals[i]});
        }
        res.evaluations += polls.size();
        if (best < polls.size()) {
            theta = polls[best];
            current = evals[best];
            res.accepted_history.push_back(current.value);
        }
        else {
            step *= 0.5;
        }
    }
    res.theta = theta;
    res.objective = current.value;
    return res;
}

} // namespace hris
