#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "dhlab/catalog.hpp"
#include "dhlab/fiber_integration.hpp"
#include "dhlab/lattice.hpp"

using namespace dhlab;
using lattice::IntegralAffineData;

TEST(AffineMeasure, Examples)
{
    EXPECT_DOUBLE_EQ(lattice::affine_measure_eval(lattice::standard_lattice(2), Box::cube(2, 0.0, 1.0)), 1.0);
    EXPECT_DOUBLE_EQ(lattice::affine_measure_eval(lattice::standard_lattice(1, 2), Box::interval(0.0, 1.0)), 0.5);
    EXPECT_DOUBLE_EQ(lattice::affine_measure_eval({Eigen::MatrixXd::Constant(1, 1, 2.0), 1}, Box::interval(0.0, 1.0)), 2.0);
}

TEST(AffineMeasure, EmptyRegionHasZeroMass)
{
    EXPECT_EQ(lattice::affine_measure_eval(lattice::standard_lattice(1), Box::interval(0.5, 0.5)), 0.0);
}

TEST(AffineMeasure, AdditiveOverDisjointBoxesAndLinearInDeterminant)
{
    IntegralAffineData d{(Eigen::MatrixXd(2, 2) << 2, 1, 1, 3).finished(), 1};
    const Box whole(Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(1.0, 2.0));
    const Box left(Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(0.3, 2.0));
    const Box right(Eigen::Vector2d(0.3, 0.0), Eigen::Vector2d(1.0, 2.0));
    EXPECT_NEAR(lattice::affine_measure_eval(d, whole), lattice::affine_measure_eval(d, left) + lattice::affine_measure_eval(d, right), 1e-14);
    IntegralAffineData doubled{d.L, 1};
    doubled.L.row(0) *= 2.0;
    EXPECT_NEAR(lattice::affine_measure_eval(doubled, whole), 2.0 * lattice::affine_measure_eval(d, whole), 1e-13);
}

TEST(AffineMeasure, InvalidDataIsRejected)
{
    EXPECT_THROW(lattice::affine_density({Eigen::MatrixXd::Zero(1, 1), 1}), ConfigError);
    EXPECT_THROW(lattice::affine_density({Eigen::MatrixXd::Identity(1, 1), 0}), ConfigError);
    EXPECT_THROW(lattice::affine_measure_eval(lattice::standard_lattice(1), Box::cube(2, 0.0, 1.0)), DomainError);
}

TEST(FiberIntegration, ConstantOneOnTheDisc)
{
    const auto m = catalog::catalog_get("disc");
    const auto r = lattice::fiber_integration_check(m, lattice::standard_lattice(1), [](const Eigen::VectorXd&) { return 1.0; },
                                                    1000000, 1);
    EXPECT_NEAR(r.rhs, 2.0 * std::numbers::pi, 1e-12);
    EXPECT_LE(std::abs(r.lhs - r.rhs), std::max(3.0 * r.sigma, 1e-9));
}

TEST(FiberIntegration, ZeroFunctionGivesExactZero)
{
    const auto m = catalog::catalog_get("hopf");
    const auto r = lattice::fiber_integration_check(m, lattice::standard_lattice(1), [](const Eigen::VectorXd&) { return 0.0; },
                                                    10000, 1);
    EXPECT_EQ(r.lhs, 0.0);
    EXPECT_EQ(r.rhs, 0.0);
    EXPECT_EQ(r.residual, 0.0);
}

TEST(FiberIntegration, SurfaceProductIsSixPi)
{
    const auto m = catalog::catalog_get("surface_product", 3.0);
    const auto r = lattice::fiber_integration_check(m, lattice::standard_lattice(1), [](const Eigen::VectorXd&) { return 1.0; },
                                                    1000000, 2);
    EXPECT_NEAR(r.rhs, 6.0 * std::numbers::pi, 1e-11);
    EXPECT_LE(std::abs(r.lhs - r.rhs), std::max(3.0 * r.sigma, 1e-9));
}

TEST(FiberIntegration, PolynomialTestFunctionsAcrossWeightCatalog)
{
    const auto g = [](const Eigen::VectorXd& mu) { return 1.0 + mu(0) * mu(0) - 0.5 * mu.sum(); };
    for (const char* name : {"hopf", "weighted", "swap_quotient", "surface_product_hopf", "rank2"}) {
        const auto m = catalog::catalog_get(name);
        const auto data = reduction::model_lattice(m);
        const auto r = lattice::fiber_integration_check(m, data, g, 1000000, 3, name == std::string("rank2") ? 16 : 64);
        EXPECT_LE(std::abs(r.lhs - r.rhs), 3.0 * r.sigma) << name << " lhs " << r.lhs << " rhs " << r.rhs;
    }
}

TEST(FiberIntegration, ChartModelsAreRejected)
{
    EXPECT_THROW(lattice::fiber_integration_check(catalog::catalog_get("sphere"), lattice::standard_lattice(1),
                                                  [](const Eigen::VectorXd&) { return 1.0; }, 10000, 1),
                 DomainError);
}
