#pragma once

// Time-dependent loads l : [0,T] -> Y*, stored as assembled dual vectors.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "expression.hpp"
#include "spatial.hpp"
#include "trajectory.hpp"

namespace hris {

class Load {
  public:
    using Fn = std::function<DualField(double)>;

    Load() = default;
    explicit Load(Fn fn) : m_fn(std::move(fn)) {}

    DualField operator()(double t) const
    {
        if (!m_fn) {
            throw std::logic_error("Load: empty");
        }
        return m_fn(t);
    }

    explicit operator bool() const noexcept { return static_cast<bool>(m_fn); }
    const Fn& function() const noexcept { return m_fn; }

  private:
    Fn m_fn;
};

inline Load zero_load(const Mesh& mesh)
{
    const std::size_t n = mesh.n_nodes();
    return Load([n](double) { return DualField::zero(n); });
}

/// l(t) = M [value(t, x_i)]_i: the load vector of the P1 interpolant.
inline Load expression_load(const Mesh& mesh, Expression e)
{
    const Vector x = mesh.node_coords();
    const Matrix M = mesh.mass();
    return Load([x, M, e = std::move(e)](double t) {
        Vector nodal(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            nodal(i) = e(Variables{t, x(i), 0.0});
        }
        return DualField(M * nodal);
    });
}

/// l(t, x) = amplitude(t) * profile(x).
inline Load separable_load(const Mesh& mesh, ScalarFunction amplitude, const Field& profile)
{
    const DualField shape = assemble(mesh, profile);
    return Load([shape, a = std::move(amplitude)](double t) { return a(t) * shape; });
}

/// Spatially uniform load a(t) * 1: reproduces the single-degree-of-freedom
/// problem when every nodal field stays constant in space.
inline Load uniform_load(const Mesh& mesh, ScalarFunction amplitude)
{
    return separable_load(mesh, std::move(amplitude), Field::constant(mesh.n_nodes(), 1.0));
}

/// Piecewise-linear interpolation of dual values given at increasing times;
/// constant outside the table.
inline Load tabulated_load(std::vector<double> times, std::vector<DualField> values)
{
    if (times.size() != values.size() || times.empty()) {
        throw std::invalid_argument("tabulated_load: times and values must be nonempty and equal length");
    }
    for (std::size_t k = 1; k < times.size(); ++k) {
        if (!(times[k] > times[k - 1])) {
            throw std::invalid_argument("tabulated_load: times must be strictly increasing");
        }
        if (values[k].size() != values[0].size()) {
            throw std::invalid_argument("tabulated_load: inconsistent value dimensions");
        }
    }
    auto tb = std::make_shared<const std::pair<std::vector<double>, std::vector<DualField>>>(std::move(times),
                                                                                                 std::move(values));
    return Load([tb](double t) {
        const auto& [ts, vs] = *tb;
        if (t <= ts.front()) return vs.front();
        if (t >= ts.back()) return vs.back();
        const auto it = std::upper_bound(ts.begin(), ts.end(), t);
        const auto k = static_cast<std::size_t>(it - ts.begin()) - 1;
        const double w = (t - ts[k]) / (ts[k + 1] - ts[k]);
        return (1.0 - w) * vs[k] + w * vs[k + 1];
    });
}

inline Load scaled(Load l, double s)
{
    return Load([l = std::move(l), s](double t) { return s * l(t); });
}

inline Load sum(Load a, Load b)
{
    return Load([a = std::move(a), b = std::move(b)](double t) { return a(t) + b(t); });
}

/// l o phi
inline Load reparametrized(Load l, ScalarFunction phi)
{
    return Load([l = std::move(l), phi = std::move(phi)](double s) { return l(phi(s)); });
}

/// One term a sin(b pi t) cos(k pi x / L) of the random smooth load family.
struct LoadMode {
    double amplitude = 0.0;
    double frequency = 1.0;
    int wavenumber = 0;
};

inline Load modal_load(const Mesh& mesh, const std::vector<LoadMode>& modes)
{
    std::vector<std::pair<LoadMode, DualField>> terms;
    const double L = mesh.length();
    for (const auto& m : modes) {
        Field profile = Field::zero(mesh.n_nodes());
        for (std::size_t i = 0; i < mesh.n_nodes(); ++i) {
            profile[i] = std::cos(m.wavenumber * std::numbers::pi * mesh.node_coords()(static_cast<Eigen::Index>(i)) / L);
        }
        terms.emplace_back(m, assemble(mesh, profile));
    }
    const std::size_t n = mesh.n_nodes();
    return Load([terms = std::move(terms), n](double t) {
        DualField out = DualField::zero(n);
        for (const auto& [m, shape] : terms) {
            out += (m.amplitude * std::sin(m.frequency * std::numbers::pi * t)) * shape;
        }
        return out;
    });
}

/// Random smooth compatible load (l(0) = 0) rescaled so that
/// ||l||_{H^1(0,T;Y*)} equals `h1_target`.
struct RandomLoadFamily {
    std::size_t n_modes = 3;
    double min_frequency = 0.5;
    double max_frequency = 2.0;
    int max_wavenumber = 2;
};

inline std::vector<LoadMode> random_modes(std::mt19937_64& rng, const RandomLoadFamily& fam)
{
    std::uniform_real_distribution<double> amp(0.2, 1.0);
    std::uniform_real_distribution<double> freq(fam.min_frequency, fam.max_frequency);
    std::uniform_int_distribution<int> wave(0, fam.max_wavenumber);
    std::vector<LoadMode> modes(fam.n_modes);
    for (auto& m : modes) {
        m.amplitude = amp(rng);
        m.frequency = freq(rng);
        m.wavenumber = wave(rng);
    }
    return modes;
}

inline std::vector<LoadMode> rescale_modes(const Mesh& mesh, std::vector<LoadMode> modes, double horizon,
                                           std::size_t n_steps, double h1_target)
{
    const double norm = load_h1_norm(mesh, sample_load(modal_load(mesh, modes).function(), horizon, n_steps));
    if (norm > 0.0) {
        for (auto& m : modes) {
            m.amplitude *= h1_target / norm;
        }
    }
    return modes;
}

} // namespace hris
