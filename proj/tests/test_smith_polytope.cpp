#include <numeric>

#include <gtest/gtest.h>

#include "dhlab/polytope.hpp"
#include "dhlab/rng.hpp"
#include "dhlab/smith.hpp"

using namespace dhlab;

namespace {

IntMatrix mat(std::initializer_list<std::initializer_list<std::int64_t>> rows)
{
    IntMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& r : rows) {
        Eigen::Index j = 0;
        for (auto v : r) m(i, j++) = v;
        ++i;
    }
    return m;
}

// Order of {phi in R/Z : a_j phi in Z for all j}, by brute force over phi = k / 24.
// 24 is divisible by every possible gcd of entries bounded by 4.
std::int64_t kernel_order_by_enumeration(const IntMatrix& row)
{
    std::int64_t count = 0;
    for (std::int64_t k = 0; k < 24; ++k) {
        bool in_kernel = true;
        for (Eigen::Index j = 0; j < row.cols(); ++j) in_kernel = in_kernel && (row(0, j) * k) % 24 == 0;
        count += in_kernel;
    }
    return count;
}

}  // namespace

TEST(Smith, WeightTwoHasKernelOfOrderTwo)
{
    const SmithForm s = smith_normal_form(mat({{2}}));
    EXPECT_EQ(s.invariant_factors(), std::vector<std::int64_t>{2});
    EXPECT_EQ(s.torsion_order(), 2);
}

TEST(Smith, RowVectorsWithUnitGcdAreEffective)
{
    EXPECT_EQ(smith_normal_form(mat({{1, 1}})).invariant_factors(), std::vector<std::int64_t>{1});
    EXPECT_EQ(smith_normal_form(mat({{1, 2}})).invariant_factors(), std::vector<std::int64_t>{1});
    EXPECT_EQ(smith_normal_form(mat({{2, 4}})).invariant_factors(), std::vector<std::int64_t>{2});
}

TEST(Smith, FactorsReproduceTheInputAndAreUnimodular)
{
    SubstreamRng rng(11, 0);
    for (int trial = 0; trial < 200; ++trial) {
        const int rows = 1 + static_cast<int>(rng.uniform() * 3);
        const int cols = rows + static_cast<int>(rng.uniform() * 3);
        IntMatrix A(rows, cols);
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < cols; ++j) A(i, j) = static_cast<std::int64_t>(std::floor(rng.uniform(-6.0, 7.0)));
        }
        const SmithForm s = smith_normal_form(A);
        EXPECT_EQ(s.P * A * s.Q, s.D);
        EXPECT_EQ(std::abs(integer_determinant(s.P)), 1);
        EXPECT_EQ(std::abs(integer_determinant(s.Q)), 1);
        const auto f = s.invariant_factors();
        for (std::size_t k = 1; k < f.size(); ++k) EXPECT_EQ(f[k] % f[k - 1], 0);
        for (Eigen::Index i = 0; i < s.D.rows(); ++i) {
            for (Eigen::Index j = 0; j < s.D.cols(); ++j) {
                if (i != j) EXPECT_EQ(s.D(i, j), 0);
            }
        }
    }
}

TEST(Smith, EffectivenessMatchesKernelEnumeration)
{
    for (int a = -4; a <= 4; ++a) {
        for (int b = -4; b <= 4; ++b) {
            for (int c = -4; c <= 4; ++c) {
                if (a == 0 && b == 0 && c == 0) continue;
                const IntMatrix W = mat({{a, b, c}});
                const std::int64_t order = kernel_order_by_enumeration(W);
                const SmithForm s = smith_normal_form(W);
                EXPECT_EQ(s.torsion_order(), order) << a << " " << b << " " << c;
                EXPECT_EQ(s.torsion_order() == 1, order == 1);
            }
        }
    }
}

TEST(Smith, BareissDeterminant)
{
    EXPECT_EQ(integer_determinant(mat({{2, 1}, {7, 4}})), 1);
    EXPECT_EQ(integer_determinant(mat({{0, 1}, {1, 0}})), -1);
    EXPECT_EQ(integer_determinant(mat({{1, 2, 3}, {4, 5, 6}, {7, 8, 10}})), -3);
}

namespace {

HPolytope cube(int d)
{
    HPolytope P;
    P.A = Eigen::MatrixXd::Zero(0, d);
    for (int k = 0; k < d; ++k) {
        P.add(Eigen::VectorXd::Unit(d, k), 1.0);
        P.add(-Eigen::VectorXd::Unit(d, k), 0.0);
    }
    return P;
}

HPolytope simplex(int d)
{
    HPolytope P;
    P.A = Eigen::MatrixXd::Zero(0, d);
    for (int k = 0; k < d; ++k) P.add(-Eigen::VectorXd::Unit(d, k), 0.0);
    P.add(Eigen::VectorXd::Ones(d), 1.0);
    return P;
}

}  // namespace

TEST(Polytope, CubesAndSimplices)
{
    double factorial = 1.0;
    for (int d = 1; d <= 5; ++d) {
        factorial *= d;
        EXPECT_NEAR(polytope_volume(cube(d)), 1.0, 1e-12);
        EXPECT_NEAR(polytope_volume(simplex(d)), 1.0 / factorial, 1e-12);
    }
}

TEST(Polytope, ZeroDimensionalPointHasUnitVolume)
{
    HPolytope feasible{Eigen::MatrixXd::Zero(1, 0), Eigen::VectorXd::Constant(1, 0.5)};
    HPolytope infeasible{Eigen::MatrixXd::Zero(1, 0), Eigen::VectorXd::Constant(1, -0.5)};
    EXPECT_EQ(polytope_volume(feasible), 1.0);
    EXPECT_EQ(polytope_volume(infeasible), 0.0);
}

TEST(Polytope, UnboundedIsDetected)
{
    HPolytope P;
    P.A = Eigen::MatrixXd::Zero(0, 2);
    P.add(-Eigen::VectorXd::Unit(2, 0), 0.0);
    P.add(-Eigen::VectorXd::Unit(2, 1), 0.0);
    EXPECT_FALSE(is_bounded(P));
    EXPECT_THROW(polytope_volume(P), DomainError);
}

TEST(Polytope, SlicedCubeMatchesInclusionExclusion)
{
    // {x in [0,1]^3 : x1 + x2 + x3 <= s}, volume by inclusion-exclusion over truncated simplices
    for (double s : {0.5, 1.0, 1.7, 2.4}) {
        HPolytope P = cube(3);
        P.add(Eigen::VectorXd::Ones(3), s);
        double expect = 0.0;
        const int binom[4] = {1, 3, 3, 1};
        for (int k = 0; k <= 3; ++k) {
            const double r = s - k;
            if (r > 0) expect += (k % 2 ? -1.0 : 1.0) * binom[k] * r * r * r / 6.0;
        }
        EXPECT_NEAR(polytope_volume(P), expect, 1e-12) << s;
    }
}
