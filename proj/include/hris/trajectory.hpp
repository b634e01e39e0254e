#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "spatial.hpp"

namespace hris {

/// Uniform time grid t_k = k * tau, k = 0..n_steps, with one state per node.
class Trajectory {
  public:
    Trajectory() = default;

    Trajectory(double horizon, std::size_t n_steps) : m_horizon(horizon), m_n_steps(n_steps)
    {
        if (!(horizon > 0.0) || n_steps == 0) {
            throw std::invalid_argument("Trajectory: horizon and n_steps must be positive");
        }
        m_states.reserve(n_steps + 1);
    }

    double horizon() const noexcept { return m_horizon; }
    std::size_t n_steps() const noexcept { return m_n_steps; }
    double tau() const noexcept { return m_horizon / static_cast<double>(m_n_steps); }
    double time(std::size_t k) const noexcept { return static_cast<double>(k) * tau(); }

    /// Number of states stored so far (a solve in progress holds a prefix).
    std::size_t size() const noexcept { return m_states.size(); }
    bool complete() const noexcept { return m_states.size() == m_n_steps + 1; }

    void push_back(Field q)
    {
        if (m_states.size() > m_n_steps) {
            throw std::logic_error("Trajectory: grid already full");
        }
        if (!m_states.empty() && q.size() != m_states.front().size()) {
            throw std::invalid_argument("Trajectory: state dimension changed");
        }
        m_states.push_back(std::move(q));
    }

    const Field& state(std::size_t k) const { return m_states.at(k); }
    Field& state(std::size_t k) { return m_states.at(k); }
    const std::vector<Field>& states() const noexcept { return m_states; }

    /// Backward difference (q_k - q_{k-1}) / tau; k = 0 returns the first rate.
    Field rate(std::size_t k) const
    {
        if (m_states.size() < 2) {
            throw std::logic_error("Trajectory: rate needs two states");
        }
        const std::size_t j = std::max<std::size_t>(k, 1);
        return (1.0 / tau()) * (state(j) - state(j - 1));
    }

    /// Linear interpolation in time, clamped to [0, horizon].
    Field at(double t) const
    {
        if (m_states.empty()) {
            throw std::logic_error("Trajectory: empty");
        }
        const double s = std::clamp(t / tau(), 0.0, static_cast<double>(m_states.size() - 1));
        const auto k = std::min(static_cast<std::size_t>(std::floor(s)), m_states.size() - 1);
        if (k + 1 >= m_states.size()) {
            return m_states.back();
        }
        const double w = s - static_cast<double>(k);
        return (1.0 - w) * m_states[k] + w * m_states[k + 1];
    }

  private:
    double m_horizon = 1.0;
    std::size_t m_n_steps = 1;
    std::vector<Field> m_states;
};

/// sup_k ||q_k||_{H^1}
inline double c_norm(const Mesh& mesh, const Trajectory& q)
{
    double m = 0.0;
    for (const auto& s : q.states()) {
        m = std::max(m, h1_norm(mesh, s));
    }
    return m;
}

/// sup_k ||a_k - b_k||_{H^1}; grids must coincide.
inline double c_distance(const Mesh& mesh, const Trajectory& a, const Trajectory& b)
{
    if (a.size() != b.size()) {
        throw std::invalid_argument("c_distance: trajectories on different grids");
    }
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        m = std::max(m, h1_norm(mesh, a.state(k) - b.state(k)));
    }
    return m;
}

/// Discrete H^1(0,T;Y) norm: trapezoid of ||q||_Y^2 plus the exact integral of
/// the piecewise-constant backward-difference rates.
inline double h1_time_norm(const Mesh& mesh, const Trajectory& q)
{
    const double tau = q.tau();
    double states = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) {
        const double w = (k == 0 || k + 1 == q.size()) ? 0.5 : 1.0;
        states += w * tau * h1_inner(mesh, q.state(k), q.state(k));
    }
    double rates = 0.0;
    for (std::size_t k = 1; k < q.size(); ++k) {
        const Field r = q.rate(k);
        rates += tau * h1_inner(mesh, r, r);
    }
    return std::sqrt(states + rates);
}

inline double h1_time_distance(const Mesh& mesh, const Trajectory& a, const Trajectory& b)
{
    if (a.size() != b.size()) {
        throw std::invalid_argument("h1_time_distance: trajectories on different grids");
    }
    Trajectory d(a.horizon(), a.n_steps());
    for (std::size_t k = 0; k < a.size(); ++k) {
        d.push_back(a.state(k) - b.state(k));
    }
    return h1_time_norm(mesh, d);
}

/// Samples of a dual-valued load on a uniform grid.
struct LoadSamples {
    double tau = 1.0;
    std::vector<DualField> values;
};

inline LoadSamples sample_load(const std::function<DualField(double)>& load, double horizon, std::size_t n_steps)
{
    LoadSamples s;
    s.tau = horizon / static_cast<double>(n_steps);
    s.values.reserve(n_steps + 1);
    for (std::size_t k = 0; k <= n_steps; ++k) {
        s.values.push_back(load(static_cast<double>(k) * s.tau));
    }
    return s;
}

/// ||l||_{H^1(0,T;Y*)}: trapezoid of squared dual norms plus difference quotients.
inline double load_h1_norm(const Mesh& mesh, const LoadSamples& l)
{
    double values = 0.0;
    double rates = 0.0;
    const std::size_t n = l.values.size();
    for (std::size_t k = 0; k < n; ++k) {
        const double w = (k == 0 || k + 1 == n) ? 0.5 : 1.0;
        values += w * l.tau * std::pow(dual_norm(mesh, l.values[k]), 2);
        if (k > 0) {
            rates += l.tau * std::pow(dual_norm(mesh, (1.0 / l.tau) * (l.values[k] - l.values[k - 1])), 2);
        }
    }
    return std::sqrt(values + rates);
}

/// ||l||_{W^{1,1}(0,T;Y*)}
inline double load_w11_norm(const Mesh& mesh, const LoadSamples& l)
{
    double values = 0.0;
    double rates = 0.0;
    const std::size_t n = l.values.size();
    for (std::size_t k = 0; k < n; ++k) {
        const double w = (k == 0 || k + 1 == n) ? 0.5 : 1.0;
        values += w * l.tau * dual_norm(mesh, l.values[k]);
        if (k > 0) {
            rates += dual_norm(mesh, l.values[k] - l.values[k - 1]);
        }
    }
    return values + rates;
}

/// ||l||_{H^1(0,T;L^2)} for loads representing L^2 functions.
inline double load_h1_l2_norm(const Mesh& mesh, const LoadSamples& l)
{
    double values = 0.0;
    double rates = 0.0;
    const std::size_t n = l.values.size();
    for (std::size_t k = 0; k < n; ++k) {
        const double w = (k == 0 || k + 1 == n) ? 0.5 : 1.0;
        values += w * l.tau * std::pow(dual_l2_norm(mesh, l.values[k]), 2);
        if (k > 0) {
            rates += l.tau * std::pow(dual_l2_norm(mesh, (1.0 / l.tau) * (l.values[k] - l.values[k - 1])), 2);
        }
    }
    return std::sqrt(values + rates);
}

inline LoadSamples difference(const LoadSamples& a, const LoadSamples& b)
{
    if (a.values.size() != b.values.size()) {
        throw std::invalid_argument("load difference: grids differ");
    }
    LoadSamples d;
    d.tau = a.tau;
    d.values.reserve(a.values.size());
    for (std::size_t k = 0; k < a.values.size(); ++k) {
        d.values.push_back(a.values[k] - b.values[k]);
    }
    return d;
}

} // namespace hris
