#include <gtest/gtest.h>

#include "support.hpp"

using namespace hris;

namespace {

double clamped_kappa(double z) { return std::max(0.2, 1.0 - 0.5 * z); }

/// Rate-independent incremental problem (eps = 0) for the uniform scalar
/// field: q_{n+1} = max(q_n, (l(t_{n+1}) - kappa(zeta_n)) / alpha) with
/// zeta_n the trapezoid integral of q up to t_n.
std::vector<double> incremental_reference(const ScalarFunction& l, const std::function<double(double)>& kappa,
                                          std::size_t steps)
{
    const double tau = 1.0 / static_cast<double>(steps);
    double q = 0.0, zeta = 0.0;
    std::vector<double> out{0.0};
    for (std::size_t n = 0; n < steps; ++n) {
        const double next = std::max(q, l(tau * static_cast<double>(n + 1)) - kappa(zeta));
        zeta += 0.5 * tau * (q + next);
        q = next;
        out.push_back(q);
    }
    return out;
}

} // namespace

TEST(Schedule, Geometric)
{
    const auto s = geometric_schedule();
    ASSERT_EQ(s.size(), 8u);
    EXPECT_DOUBLE_EQ(s.front(), 0.1);
    EXPECT_DOUBLE_EQ(s.back(), 0.1 / 128.0);
    EXPECT_THROW(geometric_schedule(0.0, 3), std::invalid_argument);
    EXPECT_THROW(geometric_schedule(0.1, 0), std::invalid_argument);
}

TEST(Sweep, RejectsBadSchedule)
{
    auto sc = test::scalar_scenario(constant_function(0.0), test::default_fatigue(), 10);
    EXPECT_THROW(vv_sweep(sc, {}), std::invalid_argument);
    EXPECT_THROW(vv_sweep(sc, {0.1, 0.2}), std::invalid_argument);
    EXPECT_THROW(vv_sweep(sc, {0.1, -0.01}), std::invalid_argument);
}

TEST(Sweep, ZeroLoad)
{
    auto sc = test::scalar_scenario(constant_function(0.0), test::default_fatigue(), 50);
    const auto res = vv_sweep(sc, geometric_schedule(0.1, 4));
    ASSERT_EQ(res.cauchy_diffs_c.size(), 3u);
    for (double d : res.cauchy_diffs_c) EXPECT_EQ(d, 0.0);
    for (const auto& q : res.trajectories) EXPECT_EQ(c_norm(*sc.mesh, q), 0.0);
    EXPECT_TRUE(res.certification.pass);
    EXPECT_EQ(res.certification.max_stability_violation(), 0.0);
    EXPECT_EQ(res.certification.max_balance_residual(), 0.0);
    EXPECT_TRUE(res.warning.empty());
}

TEST(Sweep, ScalarOracleCauchyAndCertificate)
{
    auto sc = test::scalar_scenario(test::two_sin_pi(), DissipationSpec::fatigue(constant_function(1.0), 0.0), 1000);
    SweepOptions opt;
    opt.jobs = 2;
    const auto res = vv_sweep(sc, geometric_schedule(), opt);
    for (double r : res.cauchy_ratios()) {
        EXPECT_LT(r, 1.0);
    }
    EXPECT_TRUE(res.certification.pass);
    EXPECT_NEAR(res.limit().state(1000)[0], 1.0, 1e-2);
}

TEST(Sweep, JobCountDoesNotChangeResults)
{
    auto sc = test::scalar_scenario(test::two_sin_pi(), test::default_fatigue(), 200);
    SweepOptions one, three;
    three.jobs = 3;
    const auto a = vv_sweep(sc, geometric_schedule(0.1, 4), one);
    const auto b = vv_sweep(sc, geometric_schedule(0.1, 4), three);
    for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_EQ(c_distance(*sc.mesh, a.trajectories[k], b.trajectories[k]), 0.0);
    }
}

TEST(Sweep, StateDependentThresholdMatchesIncrementalProblem)
{
    const std::size_t steps = 200;
    auto sc = test::scalar_scenario(test::two_sin_pi(), DissipationSpec::fatigue(clamped_kappa, 0.5), steps);
    const auto res = vv_sweep(sc, geometric_schedule());
    const auto ref = incremental_reference(test::two_sin_pi(), clamped_kappa, 16 * steps);
    double gap = 0.0;
    for (std::size_t k = 0; k <= steps; ++k) {
        gap = std::max(gap, std::abs(res.limit().state(k)[0] - ref[16 * k]));
    }
    EXPECT_LE(gap, 3.0 * sc.tau());
    EXPECT_TRUE(res.certification.pass);
}

TEST(Sweep, IncompatibleLoadWarns)
{
    auto sc = test::scalar_scenario([](double t) { return 3.0 + t; }, DissipationSpec::fatigue(constant_function(1.0), 0.0), 20);
    const auto res = vv_sweep(sc, geometric_schedule(0.1, 2));
    EXPECT_FALSE(res.compatibility.compatible);
    EXPECT_FALSE(res.warning.empty());
}

TEST(Certificate, CorruptedTrajectoryIsFlagged)
{
    auto sc = test::scalar_scenario(test::two_sin_pi(), DissipationSpec::fatigue(constant_function(1.0), 0.0), 1000);
    const auto q = solve_viscous(sc, 1e-4).trajectory;
    const auto good = certify_limit(q, sc, 20, 1e-2);
    EXPECT_TRUE(good.pass);
    Trajectory shifted(q.horizon(), q.n_steps());
    for (const auto& s : q.states()) shifted.push_back(s + Field::constant(2, 0.1));
    const auto bad = certify_limit(shifted, sc, 20, 1e-2);
    EXPECT_FALSE(bad.pass);
    EXPECT_GT(bad.max_balance_residual(), bad.tolerance * bad.balance_scale);
}

TEST(RateIndependence, IdentityReparametrization)
{
    auto sc = test::scalar_scenario(test::two_sin_pi(), DissipationSpec::fatigue(constant_function(1.0), 0.0), 500);
    EXPECT_LT(check_rate_independence(sc, {1.0, [](double s) { return s; }}, 0.01), 1e-12);
}

TEST(RateIndependence, InvalidReparametrizations)
{
    auto sc = test::scalar_scenario(test::two_sin_pi(), test::default_fatigue(), 50);
    EXPECT_THROW(check_rate_independence(sc, {1.0, [](double s) { return s * (1.0 - s); }}, 0.1), std::invalid_argument);
    EXPECT_THROW(check_rate_independence(sc, {1.0, [](double s) { return s + 0.1; }}, 0.1), std::invalid_argument);
    EXPECT_THROW(check_rate_independence(sc, {1.0, [](double s) { return 2 * s; }}, 0.1), std::invalid_argument);
    EXPECT_THROW(check_rate_independence(sc, {1.0, {}}, 0.1), std::invalid_argument);
}

TEST(RateIndependence, ViscosityBreaksInvarianceLinearly)
{
    auto sc = test::scalar_scenario(test::two_sin_pi(), DissipationSpec::fatigue(constant_function(1.0), 0.0), 4000);
    const Reparametrization doubled{0.5, [](double s) { return 2.0 * s; }};
    EXPECT_GT(check_rate_independence(sc, doubled, 0.1), 0.1 * 0.1);
    const double d1 = check_rate_independence(sc, doubled, 0.02);
    const double d2 = check_rate_independence(sc, doubled, 0.01);
    EXPECT_NEAR(d1 / d2, 2.0, 0.4);
}
