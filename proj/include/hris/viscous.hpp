#pragma once

// Viscous regularization -dE(t,q) in d_2 [R + eps/2 ||.||_Y^2](H(q)(t), q')
// with E(t,q) = alpha/2 ||q||_Y^2 - <l(t), q>, q(0) = 0.
//
// Default integrator: incremental minimization with the history frozen at
// the start of each step,
//   q_{n+1} = argmin_q E(t_{n+1}, q) + tau R(zeta_n, (q - q_n)/tau)
//                      + eps/(2 tau) ||q - q_n||_Y^2,
// which in the rate eta = (q - q_n)/tau is the prox problem with viscosity
// eps + alpha tau and force l(t_{n+1}) - alpha V q_n.
// Cross-check integrator: forward Euler on
//   q' = (1/eps) V^{-1} (I - P_{d_2 R(zeta, 0)}) (-dE(t, q)).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "dissipation.hpp"
#include "history.hpp"
#include "load.hpp"
#include "qp.hpp"
#include "spatial.hpp"
#include "trajectory.hpp"

namespace hris {

struct Scenario {
    std::shared_ptr<const Mesh> mesh;
    double alpha = 1.0;
    Load load;
    KernelSpec kernel;
    DissipationSpec dissipation;
    double horizon = 1.0;
    std::size_t n_steps = 100;

    double tau() const { return horizon / static_cast<double>(n_steps); }
    double time(std::size_t k) const { return static_cast<double>(k) * tau(); }

    void validate() const
    {
        if (!mesh) {
            throw std::invalid_argument("scenario: mesh missing");
        }
        if (!(alpha > 0.0) || !std::isfinite(alpha)) {
            throw std::invalid_argument("scenario: alpha must be positive");
        }
        if (!(horizon > 0.0) || !std::isfinite(horizon)) {
            throw std::invalid_argument("scenario: horizon must be positive");
        }
        if (n_steps == 0) {
            throw std::invalid_argument("scenario: n_steps must be positive");
        }
        if (!load) {
            throw std::invalid_argument("scenario: load missing");
        }
        if (kernel.y0.size() != mesh->n_nodes()) {
            throw std::invalid_argument("scenario: kernel y0 does not match the mesh");
        }
        if (!load(0.0).all_finite()) {
            throw std::invalid_argument("scenario: load not finite at t = 0");
        }
    }
};

/// -d_q E(t, q) = l(t) - alpha V q
inline DualField neg_energy_gradient(const Scenario& sc, double t, const Field& q)
{
    return sc.load(t) - sc.alpha * riesz_apply(*sc.mesh, q);
}

inline double energy(const Scenario& sc, double t, const Field& q)
{
    return 0.5 * sc.alpha * h1_inner(*sc.mesh, q, q) - pair(sc.load(t), q);
}

enum class Integrator { Implicit, Explicit };

struct SolveOptions {
    Integrator integrator = Integrator::Implicit;
    QpOptions qp{};
    /// Seed each inner solve with the previous step's solution; otherwise
    /// start from zero.
    bool warm_start = true;
};

struct StepResult {
    Field q;
    Field rate;
    int iterations = 0;
};

/// One incremental-minimization step from (t_n, q_n) to t_{n+1}; eps >= 0
/// (eps = 0 is the rate-independent incremental problem).
inline StepResult viscous_step(const Scenario& sc, double eps, const Field& q_n, const Field& zeta_n, double t_next,
                               const QpOptions& opt = {}, const Field* warm = nullptr)
{
    if (!(eps >= 0.0)) {
        throw std::invalid_argument("viscous_step: eps must be nonnegative");
    }
    if (!q_n.all_finite()) {
        throw std::invalid_argument("viscous_step: q_n not finite");
    }
    const double tau = sc.tau();
    const DualField force = neg_energy_gradient(sc, t_next, q_n);
    ProxResult p = prox_rate(sc.dissipation, zeta_n, force, eps + sc.alpha * tau, *sc.mesh, opt, warm);
    StepResult out;
    out.q = q_n + tau * p.rate;
    out.rate = std::move(p.rate);
    out.iterations = p.iterations;
    return out;
}

/// Forward-Euler step of the projection ODE from (t_n, q_n).
inline StepResult explicit_projection_step(const Scenario& sc, double eps, const Field& q_n, const Field& zeta_n,
                                           double t_n, const QpOptions& opt = {}, const DualField* warm = nullptr,
                                           DualField* projection_out = nullptr)
{
    if (!(eps > 0.0)) {
        throw std::invalid_argument("explicit_projection_step: eps must be positive");
    }
    const DualField omega = neg_energy_gradient(sc, t_n, q_n);
    const DualField P = project_subdiff_zero(sc.dissipation, zeta_n, omega, *sc.mesh, opt, warm);
    StepResult out;
    out.rate = (1.0 / eps) * riesz_solve(*sc.mesh, omega - P);
    out.q = q_n + sc.tau() * out.rate;
    if (projection_out) {
        *projection_out = P;
    }
    return out;
}

struct SolveReport {
    std::vector<double> times;                     ///< t_{n+1}
    std::vector<double> energy_balance_residuals;  ///< relative violation of <-dE - eps V q', q'> = R
    std::vector<double> polar_violations;          ///< max over extreme rays of <-dE - eps V q', v> - R(v)
    std::vector<double> rate_norms;
    std::vector<double> state_norms;
    std::vector<double> dissipation_values;
    std::vector<double> energies;
    std::vector<int> inner_iterations;
    double max_rate_norm = 0.0;
    double trajectory_h1_norm = 0.0;

    double max_balance_residual() const
    {
        return energy_balance_residuals.empty()
                   ? 0.0
                   : *std::max_element(energy_balance_residuals.begin(), energy_balance_residuals.end());
    }
    double max_polar_violation() const
    {
        return polar_violations.empty() ? 0.0 : *std::max_element(polar_violations.begin(), polar_violations.end());
    }
};

struct ViscousSolution {
    Trajectory trajectory;
    SolveReport report;
};

namespace detail {

/// Polar inequality over the extreme rays of dom R: nodal basis vectors
/// (Fatigue) or +-e_i (WeightedL1). Exact sup of <phi, v> - R(zeta, v) over
/// unit nodal directions.
inline double polar_violation(const DissipationSpec& spec, const Field& zeta, const DualField& phi, const Mesh& mesh)
{
    const DualField t = threshold(spec, zeta, mesh);
    double worst = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) {
        const double e = spec.is_fatigue() ? phi[i] - t[i] : std::abs(phi[i]) - t[i];
        worst = std::max(worst, e);
    }
    return worst;
}

inline void record_step(const Scenario& sc, double eps, double t_eval, const Field& q_eval, const Field& zeta,
                        const Field& rate, int iterations, double t_report, const Field& q_report, SolveReport& rep)
{
    const Mesh& mesh = *sc.mesh;
    const DualField omega = neg_energy_gradient(sc, t_eval, q_eval);
    const DualField V_rate = riesz_apply(mesh, rate);
    const DualField phi = omega - eps * V_rate;
    const double lhs = pair(phi, rate);
    const Extended R = eval_R(sc.dissipation, zeta, rate, mesh);
    const double Rv = R.is_finite() ? R.value() : std::numeric_limits<double>::infinity();
    const double scale = 1.0 + std::abs(pair(omega, rate)) + eps * std::abs(pair(V_rate, rate)) + std::abs(Rv);
    rep.times.push_back(t_report);
    rep.energy_balance_residuals.push_back(std::abs(lhs - Rv) / scale);
    rep.polar_violations.push_back(polar_violation(sc.dissipation, zeta, phi, mesh));
    const double rn = h1_norm(mesh, rate);
    rep.rate_norms.push_back(rn);
    rep.state_norms.push_back(h1_norm(mesh, q_report));
    rep.dissipation_values.push_back(Rv);
    rep.energies.push_back(energy(sc, t_report, q_report));
    rep.inner_iterations.push_back(iterations);
    rep.max_rate_norm = std::max(rep.max_rate_norm, rn);
}

} // namespace detail

inline ViscousSolution solve_viscous(const Scenario& sc, double eps, const SolveOptions& opt = {})
{
    sc.validate();
    if (!(eps > 0.0)) {
        throw std::invalid_argument("solve_viscous: eps must be positive");
    }
    const Mesh& mesh = *sc.mesh;
    const std::size_t n = mesh.n_nodes();
    ViscousSolution sol{Trajectory(sc.horizon, sc.n_steps), {}};
    auto& rep = sol.report;
    rep.times.reserve(sc.n_steps);

    HistoryAccumulator history(sc.kernel, sc.tau());
    Field q = Field::zero(n);
    sol.trajectory.push_back(q);
    history.push(q);

    Field warm_rate = Field::zero(n);
    DualField warm_projection;
    bool have_projection = false;
    for (std::size_t k = 0; k < sc.n_steps; ++k) {
        const Field zeta = history.value();
        const double t_n = sc.time(k);
        const double t_next = sc.time(k + 1);
        StepResult step;
        try {
            if (opt.integrator == Integrator::Implicit) {
                step = viscous_step(sc, eps, q, zeta, t_next, opt.qp, opt.warm_start ? &warm_rate : nullptr);
                detail::record_step(sc, eps, t_next, step.q, zeta, step.rate, step.iterations, t_next, step.q, rep);
            }
            else {
                DualField P;
                step = explicit_projection_step(sc, eps, q, zeta, t_n, opt.qp,
                                                (opt.warm_start && have_projection) ? &warm_projection : nullptr, &P);
                warm_projection = P;
                have_projection = true;
                detail::record_step(sc, eps, t_n, q, zeta, step.rate, step.iterations, t_next, step.q, rep);
            }
        }
        catch (const NumericalFailure& e) {
            throw NumericalFailure("solve_viscous: step " + std::to_string(k + 1) + ": " + e.what(), e.residual());
        }
        if (!step.q.all_finite()) {
            throw NumericalFailure("solve_viscous: non-finite state at step " + std::to_string(k + 1), 0.0);
        }
        warm_rate = step.rate;
        q = std::move(step.q);
        sol.trajectory.push_back(q);
        history.push(q);
    }
    rep.trajectory_h1_norm = h1_time_norm(mesh, sol.trajectory);
    return sol;
}

} // namespace hris
