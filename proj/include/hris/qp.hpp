#pragma once

// Small dense convex quadratic programs:
//
//   box:  min 1/2 x'Hx - b'x              s.t. lo <= x <= hi
//   l1:   min 1/2 x'Hx - b'x + sum c_i|x_i|
//
// with H symmetric positive definite. Both solvers alternate an accelerated
// proximal-gradient phase with an active-set polish that solves the reduced
// linear system exactly, so a converged result satisfies KKT to rounding.
// Residuals are natural residuals scaled by diag(H):
//   ||x - prox(x - D^{-1} grad)||_inf.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "spatial.hpp"

namespace hris {

struct QpOptions {
    double tolerance = 1e-10;
    int max_iterations = 20000;
    int active_set_iterations = 40;
    int gradient_batch = 50;
};

struct QpResult {
    Vector x;
    double residual = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

namespace detail {

inline double spectral_bound(const Matrix& H)
{
    // Power iteration, then a safety margin; falls back to Gershgorin.
    const Eigen::Index n = H.rows();
    Vector v = Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
    double lambda = 0.0;
    for (int k = 0; k < 60; ++k) {
        Vector w = H * v;
        const double nw = w.norm();
        if (nw == 0.0) {
            break;
        }
        lambda = nw;
        v = w / nw;
    }
    const double gersh = H.cwiseAbs().rowwise().sum().maxCoeff();
    return std::min(1.05 * lambda, gersh) > 0.0 ? std::min(1.05 * lambda, gersh) : gersh;
}

inline Vector clamp(const Vector& x, const Vector& lo, const Vector& hi) { return x.cwiseMax(lo).cwiseMin(hi); }

inline Vector soft(const Vector& x, const Vector& thresh)
{
    Vector out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double a = std::abs(x(i)) - thresh(i);
        out(i) = a > 0.0 ? std::copysign(a, x(i)) : 0.0;
    }
    return out;
}

/// Solve H_FF x_F = rhs_F - H_{F,fixed} x_fixed with the fixed entries of x
/// already in place. Returns false if the reduced factorization fails.
inline bool solve_reduced(const Matrix& H, const Vector& rhs, const std::vector<Eigen::Index>& free, Vector& x)
{
    const auto m = static_cast<Eigen::Index>(free.size());
    if (m == 0) {
        return true;
    }
    std::vector<char> is_free(static_cast<std::size_t>(H.rows()), 0);
    for (auto i : free) {
        is_free[static_cast<std::size_t>(i)] = 1;
    }
    Matrix Hff(m, m);
    Vector r(m);
    for (Eigen::Index a = 0; a < m; ++a) {
        const Eigen::Index i = free[static_cast<std::size_t>(a)];
        double acc = rhs(i);
        for (Eigen::Index j = 0; j < H.cols(); ++j) {
            if (!is_free[static_cast<std::size_t>(j)]) {
                acc -= H(i, j) * x(j);
            }
        }
        r(a) = acc;
        for (Eigen::Index c = 0; c < m; ++c) {
            Hff(a, c) = H(i, free[static_cast<std::size_t>(c)]);
        }
    }
    Eigen::LLT<Matrix> llt(Hff);
    if (llt.info() != Eigen::Success) {
        return false;
    }
    const Vector xf = llt.solve(r);
    if (!xf.allFinite()) {
        return false;
    }
    for (Eigen::Index a = 0; a < m; ++a) {
        x(free[static_cast<std::size_t>(a)]) = xf(a);
    }
    return true;
}

inline double box_residual(const Matrix& H, const Vector& b, const Vector& lo, const Vector& hi, const Vector& d,
                           const Vector& x)
{
    const Vector g = H * x - b;
    const Vector step = (x.array() - g.array() / d.array()).matrix();
    return (x - clamp(step, lo, hi)).lpNorm<Eigen::Infinity>();
}

inline double l1_residual(const Matrix& H, const Vector& b, const Vector& c, const Vector& d, const Vector& x)
{
    const Vector g = H * x - b;
    const Vector step = (x.array() - g.array() / d.array()).matrix();
    const Vector thresh = (c.array() / d.array()).matrix();
    return (x - soft(step, thresh)).lpNorm<Eigen::Infinity>();
}

} // namespace detail

/// Box-constrained QP. lo/hi entries may be -inf/+inf.
inline QpResult solve_box_qp(const Matrix& H, const Vector& b, const Vector& lo, const Vector& hi, const Vector& x0,
                             const QpOptions& opt = {})
{
    const Eigen::Index n = H.rows();
    const Vector d = H.diagonal();
    QpResult res;
    res.x = detail::clamp(x0.size() == n ? x0 : Vector::Zero(n), lo, hi);
    if (n == 0) {
        res.residual = 0.0;
        res.converged = true;
        return res;
    }
    const double L = detail::spectral_bound(H);

    // Active-set polish: semismooth Newton on x = clamp(x - D^{-1} g).
    auto polish = [&](Vector& x) -> bool {
        std::vector<int> state(static_cast<std::size_t>(n), 2), prev;
        for (int it = 0; it < opt.active_set_iterations; ++it) {
            ++res.iterations;
            const Vector g = H * x - b;
            std::vector<Eigen::Index> free;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double z = x(i) - g(i) / d(i);
                int s = 0;
                if (std::isfinite(lo(i)) && z <= lo(i)) {
                    s = -1;
                    x(i) = lo(i);
                }
                else if (std::isfinite(hi(i)) && z >= hi(i)) {
                    s = 1;
                    x(i) = hi(i);
                }
                else {
                    free.push_back(i);
                }
                state[static_cast<std::size_t>(i)] = s;
            }
            if (!detail::solve_reduced(H, b, free, x)) {
                return false;
            }
            if (state == prev) {
                const double r = detail::box_residual(H, b, lo, hi, d, x);
                if (r <= opt.tolerance) {
                    return true;
                }
            }
            prev = state;
        }
        return false;
    };

    Vector trial = res.x;
    if (polish(trial)) {
        res.x = detail::clamp(trial, lo, hi);
        res.residual = detail::box_residual(H, b, lo, hi, d, res.x);
        res.converged = res.residual <= opt.tolerance;
        if (res.converged) {
            return res;
        }
    }

    // Accelerated projected gradient, polishing after each batch.
    Vector x = res.x;
    Vector y = x;
    double t = 1.0;
    while (res.iterations < opt.max_iterations) {
        for (int k = 0; k < opt.gradient_batch; ++k) {
            ++res.iterations;
            const Vector xn = detail::clamp(y - (H * y - b) / L, lo, hi);
            const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            y = xn + ((t - 1.0) / tn) * (xn - x);
            x = xn;
            t = tn;
        }
        trial = x;
        if (polish(trial)) {
            res.x = detail::clamp(trial, lo, hi);
            res.residual = detail::box_residual(H, b, lo, hi, d, res.x);
            if (res.residual <= opt.tolerance) {
                res.converged = true;
                return res;
            }
        }
        if (detail::box_residual(H, b, lo, hi, d, x) <= opt.tolerance) {
            res.x = x;
            res.residual = detail::box_residual(H, b, lo, hi, d, x);
            res.converged = true;
            return res;
        }
    }
    res.x = x;
    res.residual = detail::box_residual(H, b, lo, hi, d, x);
    res.converged = res.residual <= opt.tolerance;
    return res;
}

/// min 1/2 x'Hx - b'x + sum c_i |x_i|, c >= 0 (FISTA with soft thresholding
/// plus sign-pattern polish).
inline QpResult solve_l1_qp(const Matrix& H, const Vector& b, const Vector& c, const Vector& x0,
                            const QpOptions& opt = {})
{
    const Eigen::Index n = H.rows();
    const Vector d = H.diagonal();
    QpResult res;
    res.x = x0.size() == n ? x0 : Vector::Zero(n);
    if (n == 0) {
        res.residual = 0.0;
        res.converged = true;
        return res;
    }
    const double L = detail::spectral_bound(H);

    auto polish = [&](Vector& x) -> bool {
        std::vector<int> sign(static_cast<std::size_t>(n), 2), prev;
        for (int it = 0; it < opt.active_set_iterations; ++it) {
            ++res.iterations;
            const Vector g = H * x - b;
            std::vector<Eigen::Index> free;
            Vector rhs = b;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double z = x(i) - g(i) / d(i);
                const double thr = c(i) / d(i);
                int s = 0;
                if (z > thr) {
                    s = 1;
                }
                else if (z < -thr) {
                    s = -1;
                }
                sign[static_cast<std::size_t>(i)] = s;
                if (s == 0) {
                    x(i) = 0.0;
                }
                else {
                    free.push_back(i);
                    rhs(i) -= c(i) * s;
                }
            }
            if (!detail::solve_reduced(H, rhs, free, x)) {
                return false;
            }
            if (sign == prev) {
                if (detail::l1_residual(H, b, c, d, x) <= opt.tolerance) {
                    return true;
                }
            }
            prev = sign;
        }
        return false;
    };

    Vector trial = res.x;
    if (polish(trial)) {
        res.x = trial;
        res.residual = detail::l1_residual(H, b, c, d, res.x);
        res.converged = true;
        return res;
    }

    const Vector thresh = c / L;
    Vector x = res.x;
    Vector y = x;
    double t = 1.0;
    while (res.iterations < opt.max_iterations) {
        for (int k = 0; k < opt.gradient_batch; ++k) {
            ++res.iterations;
            const Vector xn = detail::soft(y - (H * y - b) / L, thresh);
            const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            y = xn + ((t - 1.0) / tn) * (xn - x);
            x = xn;
            t = tn;
        }
        trial = x;
        if (polish(trial)) {
            res.x = trial;
            res.residual = detail::l1_residual(H, b, c, d, res.x);
            res.converged = true;
            return res;
        }
        if (detail::l1_residual(H, b, c, d, x) <= opt.tolerance) {
            res.x = x;
            res.residual = detail::l1_residual(H, b, c, d, x);
            res.converged = true;
            return res;
        }
    }
    res.x = x;
    res.residual = detail::l1_residual(H, b, c, d, x);
    res.converged = res.residual <= opt.tolerance;
    return res;
}

} // namespace hris
