#pragma once

// P1 finite elements on a uniform interval: the discrete H^1 / L^2 setting.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace hris {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when an inner solver or factorization cannot deliver its contract.
class NumericalFailure : public std::runtime_error {
  public:
    NumericalFailure(const std::string& what, double residual)
        : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"),
          m_residual(residual)
    {
    }

    double residual() const noexcept { return m_residual; }

  private:
    double m_residual;
};

namespace detail {
struct PrimalTag {};
struct DualTag {};
} // namespace detail

/// Nodal coefficient vector. The tag keeps primal fields (nodal values) and
/// dual fields (assembled load vectors) from mixing by accident.
template <class Tag>
struct NodalVector {
    Vector values;

    NodalVector() = default;
    explicit NodalVector(Vector v) : values(std::move(v)) {}

    static NodalVector zero(std::size_t n) { return NodalVector(Vector::Zero(static_cast<Eigen::Index>(n))); }
    static NodalVector constant(std::size_t n, double c)
    {
        return NodalVector(Vector::Constant(static_cast<Eigen::Index>(n), c));
    }

    std::size_t size() const noexcept { return static_cast<std::size_t>(values.size()); }
    double operator[](std::size_t i) const { return values(static_cast<Eigen::Index>(i)); }
    double& operator[](std::size_t i) { return values(static_cast<Eigen::Index>(i)); }

    bool all_finite() const { return values.allFinite(); }

    NodalVector& operator+=(const NodalVector& o)
    {
        values += o.values;
        return *this;
    }
    NodalVector& operator-=(const NodalVector& o)
    {
        values -= o.values;
        return *this;
    }
    NodalVector& operator*=(double s)
    {
        values *= s;
        return *this;
    }

    friend NodalVector operator+(NodalVector a, const NodalVector& b) { return a += b; }
    friend NodalVector operator-(NodalVector a, const NodalVector& b) { return a -= b; }
    friend NodalVector operator-(NodalVector a)
    {
        a.values = -a.values;
        return a;
    }
    friend NodalVector operator*(double s, NodalVector a) { return a *= s; }
    friend NodalVector operator*(NodalVector a, double s) { return a *= s; }
};

using Field = NodalVector<detail::PrimalTag>;
using DualField = NodalVector<detail::DualTag>;

/// Duality pairing <omega, v>; dual fields are stored assembled.
inline double pair(const DualField& omega, const Field& v)
{
    if (omega.size() != v.size()) {
        throw std::invalid_argument("pair: dimension mismatch");
    }
    return omega.values.dot(v.values);
}

/// Uniform P1 mesh of [0, length] with assembled mass, stiffness and
/// Riesz (mass + stiffness) matrices. Immutable after construction.
class Mesh {
  public:
    Mesh(std::size_t n_nodes, double length)
    {
        if (n_nodes < 2) {
            throw std::invalid_argument("build_mesh: n_nodes must be >= 2");
        }
        if (!(length > 0.0) || !std::isfinite(length)) {
            throw std::invalid_argument("build_mesh: length must be positive");
        }
        m_n = n_nodes;
        m_length = length;
        const auto n = static_cast<Eigen::Index>(n_nodes);
        const double h = length / static_cast<double>(n_nodes - 1);
        m_h = h;
        m_coords = Vector::LinSpaced(n, 0.0, length);
        m_mass = Matrix::Zero(n, n);
        m_stiffness = Matrix::Zero(n, n);
        for (Eigen::Index e = 0; e + 1 < n; ++e) {
            m_mass(e, e) += h / 3.0;
            m_mass(e + 1, e + 1) += h / 3.0;
            m_mass(e, e + 1) += h / 6.0;
            m_mass(e + 1, e) += h / 6.0;
            m_stiffness(e, e) += 1.0 / h;
            m_stiffness(e + 1, e + 1) += 1.0 / h;
            m_stiffness(e, e + 1) -= 1.0 / h;
            m_stiffness(e + 1, e) -= 1.0 / h;
        }
        m_riesz = m_mass + m_stiffness;
        m_lumped = m_mass.rowwise().sum();
        m_riesz_llt.compute(m_riesz);
        m_mass_llt.compute(m_mass);
        if (m_riesz_llt.info() != Eigen::Success || m_mass_llt.info() != Eigen::Success) {
            throw NumericalFailure("build_mesh: Cholesky factorization failed", 0.0);
        }
        m_riesz_inverse = m_riesz_llt.solve(Matrix::Identity(n, n));
    }

    std::size_t n_nodes() const noexcept { return m_n; }
    double length() const noexcept { return m_length; }
    double spacing() const noexcept { return m_h; }
    const Vector& node_coords() const noexcept { return m_coords; }
    const Matrix& mass() const noexcept { return m_mass; }
    const Matrix& stiffness() const noexcept { return m_stiffness; }
    const Matrix& riesz() const noexcept { return m_riesz; }
    /// Dense V^{-1}; meshes here are small.
    const Matrix& riesz_inverse() const noexcept { return m_riesz_inverse; }
    /// Row sums of the mass matrix (nodal quadrature weights).
    const Vector& lumped_mass() const noexcept { return m_lumped; }

    const Eigen::LLT<Matrix>& riesz_factor() const noexcept { return m_riesz_llt; }
    const Eigen::LLT<Matrix>& mass_factor() const noexcept { return m_mass_llt; }

  private:
    std::size_t m_n{};
    double m_length{};
    double m_h{};
    Vector m_coords;
    Matrix m_mass;
    Matrix m_stiffness;
    Matrix m_riesz;
    Matrix m_riesz_inverse;
    Vector m_lumped;
    Eigen::LLT<Matrix> m_riesz_llt;
    Eigen::LLT<Matrix> m_mass_llt;
};

inline Mesh build_mesh(std::size_t n_nodes, double length) { return Mesh(n_nodes, length); }

namespace detail {
inline void check_size(const Mesh& mesh, std::size_t n, const char* where)
{
    if (n != mesh.n_nodes()) {
        throw std::invalid_argument(std::string(where) + ": dimension mismatch with mesh");
    }
}
} // namespace detail

inline double h1_inner(const Mesh& mesh, const Field& a, const Field& b)
{
    detail::check_size(mesh, a.size(), "h1_inner");
    detail::check_size(mesh, b.size(), "h1_inner");
    return a.values.dot(mesh.riesz() * b.values);
}

inline double l2_inner(const Mesh& mesh, const Field& a, const Field& b)
{
    detail::check_size(mesh, a.size(), "l2_inner");
    detail::check_size(mesh, b.size(), "l2_inner");
    return a.values.dot(mesh.mass() * b.values);
}

inline double h1_norm(const Mesh& mesh, const Field& a) { return std::sqrt(std::max(0.0, h1_inner(mesh, a, a))); }
inline double l2_norm(const Mesh& mesh, const Field& a) { return std::sqrt(std::max(0.0, l2_inner(mesh, a, a))); }

/// V_Y a
inline DualField riesz_apply(const Mesh& mesh, const Field& a)
{
    detail::check_size(mesh, a.size(), "riesz_apply");
    return DualField(mesh.riesz() * a.values);
}

/// V_Y^{-1} omega
inline Field riesz_solve(const Mesh& mesh, const DualField& omega)
{
    detail::check_size(mesh, omega.size(), "riesz_solve");
    Field out(mesh.riesz_factor().solve(omega.values));
    if (!out.all_finite()) {
        throw NumericalFailure("riesz_solve: non-finite solution", 0.0);
    }
    return out;
}

/// Mass-matrix image of nodal values: the load vector of a P1 function.
inline DualField assemble(const Mesh& mesh, const Field& nodal)
{
    detail::check_size(mesh, nodal.size(), "assemble");
    return DualField(mesh.mass() * nodal.values);
}

/// ||omega||_{Y*} = sqrt(omega^T V^{-1} omega)
inline double dual_norm(const Mesh& mesh, const DualField& omega)
{
    detail::check_size(mesh, omega.size(), "dual_norm");
    return std::sqrt(std::max(0.0, omega.values.dot(mesh.riesz_factor().solve(omega.values))));
}

/// L^2 norm of the function represented by an assembled vector: sqrt(omega^T M^{-1} omega).
inline double dual_l2_norm(const Mesh& mesh, const DualField& omega)
{
    detail::check_size(mesh, omega.size(), "dual_l2_norm");
    return std::sqrt(std::max(0.0, omega.values.dot(mesh.mass_factor().solve(omega.values))));
}

/// Nodal clamp onto the discrete cone {v_i >= 0}.
inline Field cone_project(const Field& a) { return Field(a.values.cwiseMax(0.0)); }

} // namespace hris
