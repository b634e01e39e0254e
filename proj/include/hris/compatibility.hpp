#pragma once

#include <cstddef>
#include <vector>

#include "dissipation.hpp"
#include "viscous.hpp"

namespace hris {

struct CompatibilityReport {
    bool compatible = true;
    std::vector<std::size_t> violating_nodes;
    double max_excess = 0.0; ///< max_i (l(0) - M kappa(y0))_i, or |l(0)_i| - w_i g_i
};

/// l(0) in d_2 R(y0, 0): the discrete polar-cone test on l(0) - threshold(y0).
inline CompatibilityReport compatibility_check(const Scenario& sc, double tol = 1e-12)
{
    sc.validate();
    const Mesh& mesh = *sc.mesh;
    const DualField l0 = sc.load(0.0);
    const DualField t = threshold(sc.dissipation, sc.kernel.y0, mesh);
    const double scale = std::max({1.0, l0.values.cwiseAbs().maxCoeff(), t.values.cwiseAbs().maxCoeff()});
    CompatibilityReport rep;
    rep.max_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < mesh.n_nodes(); ++i) {
        const double excess = sc.dissipation.is_fatigue() ? l0[i] - t[i] : std::abs(l0[i]) - t[i];
        rep.max_excess = std::max(rep.max_excess, excess);
        if (excess > tol * scale) {
            rep.violating_nodes.push_back(i);
        }
    }
    rep.compatible = rep.violating_nodes.empty();
    return rep;
}

} // namespace hris
