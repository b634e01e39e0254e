#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include <hris/hris.hpp>

namespace hris::test {

inline std::shared_ptr<const Mesh> unit_mesh(std::size_t n) { return std::make_shared<const Mesh>(n, 1.0); }

/// Single degree of freedom: a spatially constant field on the unit
/// interval with two nodes, where every norm reduces to |value|.
inline Scenario scalar_scenario(ScalarFunction load, DissipationSpec diss, std::size_t steps, double alpha = 1.0)
{
    Scenario sc;
    sc.mesh = unit_mesh(2);
    sc.alpha = alpha;
    sc.horizon = 1.0;
    sc.n_steps = steps;
    sc.kernel = KernelSpec::identity(Field::zero(2));
    sc.dissipation = std::move(diss);
    sc.load = uniform_load(*sc.mesh, std::move(load));
    return sc;
}

inline ScalarFunction two_sin_pi()
{
    return [](double t) { return 2.0 * std::sin(std::numbers::pi * t); };
}

/// q(t) = max(0, max_{s<=t} (l(s) - kappa)) / alpha on a fine grid.
inline double running_max_oracle(const ScalarFunction& l, double kappa, double alpha, double t)
{
    double best = 0.0;
    constexpr int n = 20000;
    for (int i = 0; i <= n; ++i) {
        const double s = t * i / n;
        best = std::max(best, (l(s) - kappa) / alpha);
    }
    return best;
}

inline double fatigue_kappa(double z) { return 0.2 + 0.3 * std::exp(-z * z); }
inline double fatigue_kappa_prime(double z) { return -0.6 * z * std::exp(-z * z); }

/// sup |kappa'| for fatigue_kappa, attained at z = 1/sqrt(2).
inline double fatigue_kappa_lipschitz() { return 0.6 / std::sqrt(2.0) * std::exp(-0.5); }

inline DissipationSpec default_fatigue()
{
    return DissipationSpec::fatigue(fatigue_kappa, fatigue_kappa_lipschitz(), ScalarFunction(fatigue_kappa_prime));
}

inline DissipationSpec default_weighted_l1()
{
    return DissipationSpec::weighted_l1([](double z) { return 0.2 + 0.1 * std::tanh(z); }, 0.1);
}

inline Field random_field(std::mt19937_64& rng, std::size_t n, double lo, double hi)
{
    std::uniform_real_distribution<double> u(lo, hi);
    Field f = Field::zero(n);
    for (std::size_t i = 0; i < n; ++i) {
        f[i] = u(rng);
    }
    return f;
}

inline DualField random_dual(std::mt19937_64& rng, std::size_t n, double lo, double hi)
{
    return DualField(random_field(rng, n, lo, hi).values);
}

} // namespace hris::test
