#pragma once

// Volterra history operator H(y)(t) = y0 + int_0^t b(t - s) y(s) ds with a
// scalar convolution kernel, and its time derivative
// d/dt H(y)(t) = b(0) y(t) + int_0^t b'(t - s) y(s) ds.
// Composite trapezoid rule on the uniform solver grid.

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "expression.hpp"
#include "spatial.hpp"
#include "trajectory.hpp"

namespace hris {

struct KernelSpec {
    enum class Kind { Identity, ScalarConvolution };

    Kind kind = Kind::Identity;
    ScalarFunction b = constant_function(1.0);
    ScalarFunction b_prime = constant_function(0.0);
    Field y0;

    static KernelSpec identity(Field y0)
    {
        KernelSpec k;
        k.y0 = std::move(y0);
        return k;
    }

    static KernelSpec convolution(ScalarFunction b, ScalarFunction b_prime, Field y0)
    {
        KernelSpec k;
        k.kind = Kind::ScalarConvolution;
        k.b = std::move(b);
        k.b_prime = std::move(b_prime);
        k.y0 = std::move(y0);
        return k;
    }

    double kernel(double s) const { return kind == Kind::Identity ? 1.0 : b(s); }
    double kernel_prime(double s) const { return kind == Kind::Identity ? 0.0 : b_prime(s); }
};

namespace detail {
inline double trapezoid_weight(std::size_t j, std::size_t n) { return (j == 0 || j == n) ? 0.5 : 1.0; }

inline void check_history_args(const KernelSpec& kernel, const Trajectory& traj, std::size_t t_index, const char* where)
{
    if (t_index >= traj.size()) {
        throw std::invalid_argument(std::string(where) + ": t_index out of range");
    }
    if (kernel.y0.size() != traj.state(0).size()) {
        throw std::invalid_argument(std::string(where) + ": y0 does not match the trajectory dimension");
    }
}
} // namespace detail

/// H(y)(t_n) from the stored prefix y_0..y_n.
inline Field history_eval(const KernelSpec& kernel, const Trajectory& traj, std::size_t t_index)
{
    detail::check_history_args(kernel, traj, t_index, "history_eval");
    Field out = kernel.y0;
    if (t_index == 0) {
        return out;
    }
    const double tau = traj.tau();
    const double tn = traj.time(t_index);
    for (std::size_t j = 0; j <= t_index; ++j) {
        const double w = tau * detail::trapezoid_weight(j, t_index) * kernel.kernel(tn - traj.time(j));
        out.values += w * traj.state(j).values;
    }
    return out;
}

/// d/dt H(y)(t_n).
inline Field history_derivative(const KernelSpec& kernel, const Trajectory& traj, std::size_t t_index)
{
    detail::check_history_args(kernel, traj, t_index, "history_derivative");
    Field out = kernel.kernel(0.0) * traj.state(t_index);
    if (kernel.kind == KernelSpec::Kind::Identity || t_index == 0) {
        return out;
    }
    const double tau = traj.tau();
    const double tn = traj.time(t_index);
    for (std::size_t j = 0; j <= t_index; ++j) {
        const double w = tau * detail::trapezoid_weight(j, t_index) * kernel.kernel_prime(tn - traj.time(j));
        out.values += w * traj.state(j).values;
    }
    return out;
}

/// Incremental evaluation of H along a growing trajectory. The identity
/// kernel keeps a running trapezoid sum (O(1) per step); convolution kernels
/// re-weight the stored samples (O(n) per step).
class HistoryAccumulator {
  public:
    HistoryAccumulator(KernelSpec kernel, double tau) : m_kernel(std::move(kernel)), m_tau(tau)
    {
        if (!(tau > 0.0)) {
            throw std::invalid_argument("HistoryAccumulator: tau must be positive");
        }
        m_value = m_kernel.y0;
        m_integral = Field::zero(m_kernel.y0.size());
    }

    void push(const Field& sample)
    {
        if (sample.size() != m_kernel.y0.size()) {
            throw std::invalid_argument("HistoryAccumulator: sample dimension mismatch");
        }
        if (m_kernel.kind == KernelSpec::Kind::Identity) {
            if (m_count > 0) {
                m_integral.values += 0.5 * m_tau * (m_last.values + sample.values);
            }
            m_last = sample;
            m_value = m_kernel.y0 + m_integral;
        }
        else {
            m_samples.push_back(sample);
            const std::size_t n = m_samples.size() - 1;
            Field acc = Field::zero(sample.size());
            for (std::size_t j = 0; n > 0 && j <= n; ++j) {
                const double lag = static_cast<double>(n - j) * m_tau;
                acc.values += m_tau * detail::trapezoid_weight(j, n) * m_kernel.b(lag) * m_samples[j].values;
            }
            m_integral = acc;
            m_value = m_kernel.y0 + m_integral;
        }
        ++m_count;
    }

    /// H(y)(t_n) for the last pushed sample (y0 before any push).
    const Field& value() const noexcept { return m_value; }
    const Field& cached_integral() const noexcept { return m_integral; }
    std::size_t count() const noexcept { return m_count; }
    double tau() const noexcept { return m_tau; }

  private:
    KernelSpec m_kernel;
    double m_tau;
    std::size_t m_count = 0;
    Field m_last;
    Field m_integral;
    Field m_value;
    std::vector<Field> m_samples;
};

inline HistoryAccumulator history_step(HistoryAccumulator acc, const Field& new_sample)
{
    acc.push(new_sample);
    return acc;
}

} // namespace hris
