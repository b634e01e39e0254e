#pragma once

// State-dependent dissipation potentials R(zeta, eta) and the convex-analysis
// operations the solvers need:
//
//   Fatigue:     R(zeta, eta) = int kappa(zeta) eta   if eta >= 0, +inf otherwise
//   WeightedL1:  R(zeta, eta) = int g(zeta) |eta|
//
// kappa(zeta) is evaluated nodally and assembled with the consistent mass
// matrix, so R(zeta, eta) = (M kappa)' eta on the discrete cone. The weighted
// L1 potential uses nodal quadrature (lumped mass w), R = sum w_i g_i |eta_i|,
// which keeps its subdifferential at zero a box.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

#include "expression.hpp"
#include "qp.hpp"
#include "spatial.hpp"

namespace hris {

/// Value in [0, +inf] with 0 * inf = 0.
class Extended {
  public:
    constexpr Extended() = default;
    constexpr explicit Extended(double v) : m_value(v) {}
    static constexpr Extended infinity()
    {
        Extended e;
        e.m_infinite = true;
        return e;
    }

    constexpr bool is_infinite() const noexcept { return m_infinite; }
    constexpr bool is_finite() const noexcept { return !m_infinite; }
    double value() const
    {
        if (m_infinite) {
            throw std::logic_error("Extended: value() of +inf");
        }
        return m_value;
    }
    double as_double() const noexcept { return m_infinite ? std::numeric_limits<double>::infinity() : m_value; }

    Extended scaled(double gamma) const
    {
        if (m_infinite) {
            return gamma == 0.0 ? Extended(0.0) : infinity();
        }
        return Extended(gamma * m_value);
    }

  private:
    double m_value = 0.0;
    bool m_infinite = false;
};

struct DissipationSpec {
    enum class Kind { Fatigue, WeightedL1 };

    Kind kind = Kind::Fatigue;
    /// kappa for Fatigue, g for WeightedL1.
    ScalarFunction weight = constant_function(1.0);
    /// kappa'; required by the uniqueness experiments only.
    std::optional<ScalarFunction> weight_prime;
    /// Lipschitz constant of the weight function.
    double weight_lipschitz = 0.0;

    static DissipationSpec fatigue(ScalarFunction kappa, double lipschitz,
                                   std::optional<ScalarFunction> kappa_prime = std::nullopt)
    {
        DissipationSpec s;
        s.kind = Kind::Fatigue;
        s.weight = std::move(kappa);
        s.weight_prime = std::move(kappa_prime);
        s.weight_lipschitz = lipschitz;
        return s;
    }

    static DissipationSpec weighted_l1(ScalarFunction g, double lipschitz)
    {
        DissipationSpec s;
        s.kind = Kind::WeightedL1;
        s.weight = std::move(g);
        s.weight_lipschitz = lipschitz;
        return s;
    }

    /// Constant of the four-point condition in the discrete L^2 x H^1 setting.
    /// The consistent P1 mass satisfies D/3 <= M <= D (D lumped), which costs
    /// sqrt(3) for the consistent assembly and 3 for nodal quadrature.
    double lipschitz_R() const
    {
        return kind == Kind::Fatigue ? std::sqrt(3.0) * weight_lipschitz : 3.0 * weight_lipschitz;
    }

    bool is_fatigue() const noexcept { return kind == Kind::Fatigue; }
};

/// Nodal weight values kappa(zeta_i) / g(zeta_i).
inline Field nodal_weight(const DissipationSpec& spec, const Field& zeta)
{
    Field out = zeta;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = spec.weight(zeta[i]);
    }
    return out;
}

/// Dual vector of thresholds: M kappa(zeta) for Fatigue, w .* g(zeta) for
/// WeightedL1. The subdifferential at zero is {phi <= threshold} resp.
/// {|phi| <= threshold}.
inline DualField threshold(const DissipationSpec& spec, const Field& zeta, const Mesh& mesh)
{
    detail::check_size(mesh, zeta.size(), "threshold");
    const Field k = nodal_weight(spec, zeta);
    if (spec.is_fatigue()) {
        return assemble(mesh, k);
    }
    return DualField(mesh.lumped_mass().cwiseProduct(k.values));
}

inline bool in_domain(const DissipationSpec& spec, const Field& eta)
{
    return !spec.is_fatigue() || eta.values.minCoeff() >= 0.0;
}

inline Extended eval_R(const DissipationSpec& spec, const Field& zeta, const Field& eta, const Mesh& mesh)
{
    detail::check_size(mesh, eta.size(), "eval_R");
    const DualField t = threshold(spec, zeta, mesh);
    if (spec.is_fatigue()) {
        if (!in_domain(spec, eta)) {
            return Extended::infinity();
        }
        return Extended(pair(t, eta));
    }
    return Extended(t.values.dot(eta.values.cwiseAbs()));
}

/// R(zeta, gamma eta) == gamma R(zeta, eta) within relative 1e-12.
inline bool check_homogeneity(const DissipationSpec& spec, const Field& zeta, const Field& eta, double gamma,
                              const Mesh& mesh)
{
    if (gamma < 0.0) {
        throw std::invalid_argument("check_homogeneity: gamma must be nonnegative");
    }
    const Extended lhs = eval_R(spec, zeta, gamma * eta, mesh);
    const Extended rhs = eval_R(spec, zeta, eta, mesh).scaled(gamma);
    if (lhs.is_infinite() || rhs.is_infinite()) {
        return lhs.is_infinite() && rhs.is_infinite();
    }
    return std::abs(lhs.value() - rhs.value()) <= 1e-12 * std::max(1.0, std::abs(rhs.value()));
}

/// R(z1,e2) - R(z1,e1) + R(z2,e1) - R(z2,e2) - L_R ||z1-z2||_X ||e1-e2||_Y.
inline double check_lipschitz_axiom(const DissipationSpec& spec, const Field& zeta1, const Field& zeta2,
                                    const Field& eta1, const Field& eta2, const Mesh& mesh)
{
    if (!in_domain(spec, eta1) || !in_domain(spec, eta2)) {
        throw std::invalid_argument("check_lipschitz_axiom: eta outside dom R");
    }
    const double lhs = eval_R(spec, zeta1, eta2, mesh).value() - eval_R(spec, zeta1, eta1, mesh).value() +
                       eval_R(spec, zeta2, eta1, mesh).value() - eval_R(spec, zeta2, eta2, mesh).value();
    const double rhs = spec.lipschitz_R() * l2_norm(mesh, zeta1 - zeta2) * h1_norm(mesh, eta1 - eta2);
    return lhs - rhs;
}

struct ProxResult {
    Field rate;
    double kkt_residual = 0.0;
    int iterations = 0;
};

/// argmin_eta (eps/2) ||eta||_Y^2 - <f, eta> + R(zeta, eta).
/// `warm` seeds the inner solver (e.g. the previous step's rate).
inline ProxResult prox_rate(const DissipationSpec& spec, const Field& zeta, const DualField& f, double eps,
                            const Mesh& mesh, const QpOptions& opt = {}, const Field* warm = nullptr)
{
    if (!(eps > 0.0)) {
        throw std::invalid_argument("prox_rate: eps must be positive");
    }
    detail::check_size(mesh, f.size(), "prox_rate");
    const auto n = static_cast<Eigen::Index>(mesh.n_nodes());
    const Matrix H = eps * mesh.riesz();
    const DualField t = threshold(spec, zeta, mesh);
    const Vector x0 = warm ? warm->values : Vector::Zero(n);
    QpResult r;
    if (spec.is_fatigue()) {
        const Vector lo = Vector::Zero(n);
        const Vector hi = Vector::Constant(n, std::numeric_limits<double>::infinity());
        r = solve_box_qp(H, f.values - t.values, lo, hi, x0, opt);
    }
    else {
        r = solve_l1_qp(H, f.values, t.values, x0, opt);
    }
    if (!r.converged) {
        throw NumericalFailure("prox_rate: inner solver did not converge", r.residual);
    }
    return ProxResult{Field(r.x), r.residual, r.iterations};
}

struct Membership {
    bool contained = true;
    std::optional<std::size_t> violating_node;
    double violation = 0.0;
};

/// phi in d_2 R(zeta, 0)? Reports the worst violating node.
inline Membership subdiff_zero_contains(const DissipationSpec& spec, const Field& zeta, const DualField& phi,
                                        const Mesh& mesh, double tol = 1e-12)
{
    const DualField t = threshold(spec, zeta, mesh);
    Membership m;
    double worst = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) {
        const double excess = spec.is_fatigue() ? phi[i] - t[i] : std::abs(phi[i]) - t[i];
        if (excess > worst) {
            worst = excess;
            m.violating_node = i;
        }
    }
    const double scale = std::max(1.0, t.values.cwiseAbs().maxCoeff());
    m.violation = worst;
    m.contained = worst <= tol * scale;
    if (m.contained) {
        m.violating_node.reset();
    }
    return m;
}

/// Metric projection onto d_2 R(zeta, 0) in the V^{-1} inner product.
inline DualField project_subdiff_zero(const DissipationSpec& spec, const Field& zeta, const DualField& omega,
                                      const Mesh& mesh, const QpOptions& opt = {}, const DualField* warm = nullptr)
{
    detail::check_size(mesh, omega.size(), "project_subdiff_zero");
    const auto n = static_cast<Eigen::Index>(mesh.n_nodes());
    const DualField t = threshold(spec, zeta, mesh);
    const Matrix& Vinv = mesh.riesz_inverse();
    const Vector b = Vinv * omega.values;
    const Vector hi = t.values;
    const Vector lo = spec.is_fatigue() ? Vector::Constant(n, -std::numeric_limits<double>::infinity()) : Vector(-t.values);
    const Vector x0 = warm ? warm->values : omega.values;
    QpResult r = solve_box_qp(Vinv, b, lo, hi, x0, opt);
    if (!r.converged) {
        throw NumericalFailure("project_subdiff_zero: inner solver did not converge", r.residual);
    }
    return DualField(r.x);
}

/// sup_v <omega, v> - R(zeta, v) estimated by ray search against the closed
/// form I_{C°}(omega - M kappa(zeta)) (Fatigue) / I_{K(zeta)}(omega)
/// (WeightedL1).
struct ConjugateReport {
    double numeric_sup = 0.0;  ///< +inf when a ray grows without bound
    bool numeric_unbounded = false;
    bool closed_form_unbounded = false;
    double max_slope = 0.0;    ///< best <omega,v> - R(zeta,v) over unit rays
    double residual = 0.0;     ///< |numeric - closed form|, +inf on class mismatch
    bool match() const noexcept { return numeric_unbounded == closed_form_unbounded; }
};

inline ConjugateReport conjugate_check(const DissipationSpec& spec, const Field& zeta, const DualField& omega,
                                       const Mesh& mesh, std::size_t n_samples, std::uint64_t seed = 0)
{
    const std::size_t n = mesh.n_nodes();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(spec.is_fatigue() ? 0.0 : -1.0, 1.0);
    std::vector<Field> rays;
    for (std::size_t i = 0; i < n; ++i) {
        Field e = Field::zero(n);
        e[i] = 1.0;
        rays.push_back(e);
        if (!spec.is_fatigue()) {
            rays.push_back(-e);
        }
    }
    for (std::size_t s = 0; s < n_samples; ++s) {
        Field v = Field::zero(n);
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = u(rng);
        }
        if (v.values.norm() > 0.0) {
            rays.push_back(v);
        }
    }
    const DualField t = threshold(spec, zeta, mesh);
    const double scale = std::max({1.0, t.values.cwiseAbs().maxCoeff(), omega.values.cwiseAbs().maxCoeff()});
    const double tol = 1e-12 * scale;

    ConjugateReport rep;
    rep.max_slope = -std::numeric_limits<double>::infinity();
    double sup = 0.0; // v = 0
    for (const Field& ray : rays) {
        const Field v = (1.0 / h1_norm(mesh, ray)) * ray;
        const double slope = pair(omega, v) - eval_R(spec, zeta, v, mesh).value();
        rep.max_slope = std::max(rep.max_slope, slope);
        // Positive homogeneity makes the objective linear along each ray;
        // sample growing radii to detect unboundedness.
        double prev = 0.0;
        bool growing = true;
        for (double gamma : {1.0, 1e1, 1e2, 1e3, 1e4}) {
            const Field w = gamma * v;
            const double val = pair(omega, w) - eval_R(spec, zeta, w, mesh).value();
            growing = growing && (val > prev + tol * gamma);
            prev = val;
            sup = std::max(sup, val);
        }
        if (growing && slope > tol) {
            rep.numeric_unbounded = true;
        }
    }
    rep.numeric_sup = rep.numeric_unbounded ? std::numeric_limits<double>::infinity() : sup;

    double excess = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        excess = std::max(excess, spec.is_fatigue() ? omega[i] - t[i] : std::abs(omega[i]) - t[i]);
    }
    rep.closed_form_unbounded = excess > tol;

    if (!rep.match()) {
        rep.residual = std::numeric_limits<double>::infinity();
    }
    else {
        rep.residual = rep.numeric_unbounded ? 0.0 : std::abs(rep.numeric_sup);
    }
    return rep;
}

} // namespace hris
