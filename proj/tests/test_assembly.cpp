#include "ksafc/assembly.hpp"

#include "oracles/dense_assembly.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace ksafc;
using testing_support::rel_frobenius;
using testing_support::to_dense;

TEST(Assembly, UnitRightTriangleStiffness)
{
    const Mesh mesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}});
    const auto s = to_dense(assemble_stiffness(mesh));
    Eigen::Matrix3d expected;
    expected << 1, -0.5, -0.5, -0.5, 0.5, 0, -0.5, 0, 0.5;
    EXPECT_LE((s - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Assembly, MassEntriesOnOneTriangle)
{
    const Mesh mesh({{0, 0}, {2, 0}, {0, 1}}, {{0, 1, 2}});
    const auto mm = assemble_mass(mesh);
    const auto m = to_dense(mm.consistent);
    for (int a = 0; a < 3; ++a) {
        EXPECT_NEAR(mm.lumped[static_cast<std::size_t>(a)], 1.0 / 3.0, 1e-15);
        for (int b = 0; b < 3; ++b) {
            EXPECT_NEAR(m(a, b), a == b ? 1.0 / 6.0 : 1.0 / 12.0, 1e-15);
        }
    }
}

TEST(Assembly, MatchesDenseOracleOnUniformAndJitteredMeshes)
{
    std::mt19937_64 rng(11);
    for (int M = 1; M <= 4; ++M) {
        for (double jitter : {0.0, 0.2}) {
            const auto mesh = testing_support::jittered_mesh(M, jitter, rng);
            const P1Space space(mesh);
            const auto ops = assemble_operators(space);
            const auto ref = oracle::dense_operators(mesh);
            EXPECT_LE(rel_frobenius(to_dense(ops.mass), ref.mass), 1e-12);
            EXPECT_LE(rel_frobenius(to_dense(ops.stiffness), ref.stiffness), 1e-12);
            const Eigen::Map<const Eigen::VectorXd> ml(ops.lumped.data(),
                                                       static_cast<Eigen::Index>(ops.lumped.size()));
            EXPECT_LE((ml - ref.lumped).norm() / ref.lumped.norm(), 1e-12);

            const auto beta = testing_support::random_vector(mesh.num_nodes(), -2, 2, rng);
            const auto t = assemble_convection(space, beta, 1.7);
            const auto t_ref = oracle::dense_convection(mesh, beta, 1.7);
            EXPECT_LE(rel_frobenius(to_dense(t), t_ref), 1e-12);
            const auto d = assemble_artificial_diffusion(t);
            const auto d_ref = oracle::dense_artificial_diffusion(t_ref);
            EXPECT_LE(rel_frobenius(to_dense(d), d_ref), 1e-12);
        }
    }
}

TEST(Assembly, RowAndColumnSums)
{
    const auto mesh = build_uniform_unit_square(6);
    const P1Space space(mesh);
    const auto ops = assemble_operators(space);
    const auto s = to_dense(ops.stiffness);
    const auto m = to_dense(ops.mass);
    EXPECT_LE(s.rowwise().sum().cwiseAbs().maxCoeff(), 1e-12);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        EXPECT_NEAR(m.row(i).sum(), ops.lumped[static_cast<std::size_t>(i)], 1e-15);
    }
    std::vector<double> beta(mesh.num_nodes());
    for (std::size_t i = 0; i < beta.size(); ++i) {
        const auto& p = mesh.node(static_cast<int>(i));
        beta[i] = std::sin(3 * p.x) * std::cos(2 * p.y);
    }
    const auto t = to_dense(assemble_convection(space, beta, 1.0));
    EXPECT_LE(t.colwise().sum().cwiseAbs().maxCoeff(), 1e-14 * t.cwiseAbs().maxCoeff());
}

TEST(Assembly, ConvectionVanishesForConstantChemical)
{
    const auto mesh = build_uniform_unit_square(3);
    const auto t = assemble_convection(mesh, std::vector<double>(16, 4.2), 1.0);
    for (double v : t.values()) {
        EXPECT_NEAR(v, 0.0, 1e-13);
    }
    EXPECT_THROW(assemble_convection(mesh, std::vector<double>(3, 0.0), 1.0), DimensionError);
}

TEST(Assembly, ArtificialDiffusionOnNonSymmetricPattern)
{
    // T with an entry whose transpose is structurally absent
    const auto t = SparseMatrix::from_triplets(3, 3, std::vector<Triplet>{{0, 1, -2.0}, {1, 0, 0.5}, {2, 0, -1.0}});
    const auto d = to_dense(assemble_artificial_diffusion(t));
    EXPECT_DOUBLE_EQ(d(0, 1), 2.0);
    EXPECT_DOUBLE_EQ(d(1, 0), 2.0);
    EXPECT_DOUBLE_EQ(d(0, 2), 1.0);
    EXPECT_DOUBLE_EQ(d(2, 0), 1.0);
    EXPECT_DOUBLE_EQ(d(0, 0), -3.0);
    EXPECT_DOUBLE_EQ(d(2, 2), -1.0);
}

TEST(Quadrature, SevenPointRuleIsExactToDegreeFive)
{
    // int over the reference triangle of x^a y^b = a! b! / (a + b + 2)!
    const auto& rule = seven_point_rule();
    auto fact = [](int n) { return std::tgamma(n + 1.0); };
    double wsum = 0.0;
    for (double w : rule.weights) {
        wsum += w;
    }
    EXPECT_NEAR(wsum, 1.0, 1e-15);
    for (int a = 0; a <= 5; ++a) {
        for (int b = 0; a + b <= 5; ++b) {
            double q = 0.0;
            for (std::size_t p = 0; p < rule.weights.size(); ++p) {
                const double x = rule.points[p][1];
                const double y = rule.points[p][2];
                q += 0.5 * rule.weights[p] * std::pow(x, a) * std::pow(y, b);
            }
            EXPECT_NEAR(q, fact(a) * fact(b) / fact(a + b + 2), 1e-15) << a << "," << b;
        }
    }
}

TEST(Interpolation, NodalValuesAndLumpedProduct)
{
    const auto mesh = build_uniform_unit_square(4);
    const auto v = nodal_interpolant(mesh, [](double x, double y) { return x + 2 * y; });
    EXPECT_DOUBLE_EQ(v[1 + 5 * 2], 0.25 + 1.0);
    const std::vector<double> one(mesh.num_nodes(), 1.0);
    EXPECT_NEAR(lumped_inner_product(mesh, one, one), 1.0, 1e-14);
    EXPECT_THROW(nodal_interpolant(mesh, [](double, double) { return std::nan(""); }),
                 std::domain_error);
}

TEST(Interpolation, RitzProjectionReproducesAffineFunctions)
{
    const auto mesh = build_uniform_unit_square(5);
    const P1Space space(mesh);
    const auto r = ritz_projection(
        space, [](double x, double y) { return 1.0 - 3.0 * x + 0.5 * y; },
        [](double, double) { return Gradient{-3.0, 0.5}; });
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
        const auto& p = mesh.node(static_cast<int>(i));
        EXPECT_NEAR(r[i], 1.0 - 3.0 * p.x + 0.5 * p.y, 1e-11);
    }
}
