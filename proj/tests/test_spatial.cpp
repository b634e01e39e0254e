#include <gtest/gtest.h>

#include "support.hpp"

using namespace hris;

TEST(Mesh, UnitElementMatrices)
{
    const Mesh m(2, 1.0);
    EXPECT_NEAR(m.mass()(0, 0), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(m.mass()(0, 1), 1.0 / 6.0, 1e-15);
    EXPECT_NEAR(m.mass()(1, 1), 1.0 / 3.0, 1e-15);
    EXPECT_DOUBLE_EQ(m.stiffness()(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(m.stiffness()(0, 1), -1.0);
    EXPECT_DOUBLE_EQ(m.stiffness()(1, 1), 1.0);
}

TEST(Mesh, MassSumsToLength)
{
    for (std::size_t n : {2u, 5u, 17u}) {
        for (double L : {0.5, 1.0, 3.0}) {
            const Mesh m(n, L);
            EXPECT_NEAR(m.mass().sum(), L, 1e-13);
            EXPECT_NEAR(m.lumped_mass().sum(), L, 1e-13);
        }
    }
}

TEST(Mesh, RieszSymmetricAndWellConditioned)
{
    const Mesh m(11, 1.0);
    EXPECT_LT((m.riesz() - m.riesz().transpose()).norm(), 1e-15);
    Eigen::SelfAdjointEigenSolver<Matrix> es(m.riesz());
    const double cond = es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
    EXPECT_TRUE(std::isfinite(cond));
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
    EXPECT_LT((m.riesz() * m.riesz_inverse() - Matrix::Identity(11, 11)).norm(), 1e-12);
}

TEST(Mesh, RejectsBadArguments)
{
    EXPECT_THROW(Mesh(1, 1.0), std::invalid_argument);
    EXPECT_THROW(Mesh(4, 0.0), std::invalid_argument);
    EXPECT_THROW(Mesh(4, -1.0), std::invalid_argument);
}

TEST(Norms, ZeroAndConstant)
{
    const Mesh m(9, 2.0);
    EXPECT_EQ(h1_inner(m, Field::zero(9), Field::zero(9)), 0.0);
    EXPECT_NEAR(h1_inner(m, Field::constant(9, 3.0), Field::constant(9, 3.0)), 9.0 * 2.0, 1e-12);
}

TEST(Norms, LinearFieldIsExact)
{
    // The P1 interpolant of x is x itself: ||x||^2_{L2} = L^3/3, |x|^2_{H1} = L.
    const double L = 2.0;
    const Mesh m(7, L);
    Field x(m.node_coords());
    EXPECT_NEAR(l2_norm(m, x) * l2_norm(m, x), L * L * L / 3.0, 1e-12);
    EXPECT_NEAR(h1_inner(m, x, x), L * L * L / 3.0 + L, 1e-12);
}

TEST(Norms, Symmetry)
{
    std::mt19937_64 rng(5);
    const Mesh m(8, 1.0);
    for (int k = 0; k < 50; ++k) {
        const Field a = test::random_field(rng, 8, -1, 1);
        const Field b = test::random_field(rng, 8, -1, 1);
        EXPECT_NEAR(h1_inner(m, a, b), h1_inner(m, b, a), 1e-14);
    }
}

TEST(Norms, DimensionMismatchThrows)
{
    const Mesh m(4, 1.0);
    EXPECT_THROW(h1_inner(m, Field::zero(3), Field::zero(4)), std::invalid_argument);
    EXPECT_THROW(riesz_solve(m, DualField::zero(5)), std::invalid_argument);
}

TEST(Riesz, RoundTripAndDualNorm)
{
    std::mt19937_64 rng(6);
    const Mesh m(10, 1.5);
    EXPECT_EQ(riesz_apply(m, Field::zero(10)).values.norm(), 0.0);
    for (int k = 0; k < 20; ++k) {
        const Field a = test::random_field(rng, 10, -2, 2);
        const DualField w = riesz_apply(m, a);
        EXPECT_LT((riesz_solve(m, w) - a).values.norm(), 1e-12);
        // The Riesz map is an isometry Y -> Y*.
        EXPECT_NEAR(dual_norm(m, w), h1_norm(m, a), 1e-12);
        EXPECT_NEAR(pair(w, a), h1_inner(m, a, a), 1e-12);
    }
}

TEST(Riesz, DualL2NormOfAssembledField)
{
    std::mt19937_64 rng(7);
    const Mesh m(6, 1.0);
    const Field a = test::random_field(rng, 6, -1, 1);
    EXPECT_NEAR(dual_l2_norm(m, assemble(m, a)), l2_norm(m, a), 1e-12);
}

TEST(Cone, Projection)
{
    Field a = Field::zero(3);
    a[0] = -1.0;
    a[1] = 2.0;
    const Field p = cone_project(a);
    EXPECT_EQ(p[0], 0.0);
    EXPECT_EQ(p[1], 2.0);
    EXPECT_EQ(p[2], 0.0);
    EXPECT_EQ((cone_project(p) - p).values.norm(), 0.0);
}
