#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "dhlab/catalog.hpp"
#include "dhlab/polyfit.hpp"
#include "dhlab/pushforward.hpp"

using namespace dhlab;
using model::Vector;
using pushforward::BinnedDensity;

namespace {

constexpr double kPi = std::numbers::pi;

BinnedDensity simulate(const std::string& name, std::uint64_t samples = 1000000, std::uint64_t seed = 1, int bins = 64)
{
    const auto e = catalog::catalog_entry(name);
    return pushforward::dh_monte_carlo(e.model, Grid::uniform(e.default_grid, bins), samples, seed);
}

BinnedDensity synthetic(double lo, double hi, int bins, double (*antiderivative)(double), double rel_sigma)
{
    BinnedDensity d;
    d.grid = Grid::uniform(Box::interval(lo, hi), bins);
    d.samples = 1000000;
    for (std::size_t k = 0; k < d.grid.size(); ++k) {
        const Box c = d.grid.cell(k);
        const double m = antiderivative(c.hi(0)) - antiderivative(c.lo(0));
        d.mass.push_back(m);
        d.variance.push_back(rel_sigma * rel_sigma * m * m);
        d.boundary_flags.push_back(false);
    }
    return d;
}

double coefficient(const polyfit::ChamberFit& f, int e) { return f.polynomial.coefficient({e}); }

const model::TorusWeightModel& torus_of(const std::string& name)
{
    static std::map<std::string, model::HamiltonianModel> cache;
    auto [it, _] = cache.try_emplace(name, catalog::catalog_get(name));
    return *model::torus_part(it->second);
}

}  // namespace

TEST(Walls, ConeEnumerationExamples)
{
    const auto hopf = polyfit::detect_walls(torus_of("hopf"));
    ASSERT_EQ(hopf.size(), 1u);
    EXPECT_EQ(hopf.walls[0].offset, 0.0);

    IntMatrix W(1, 2);
    W << 1, -1;
    const auto mixed = polyfit::detect_walls(model::make_torus_model(W, Vector::Zero(1), Box::interval(-1.0, 1.0)));
    ASSERT_EQ(mixed.size(), 1u);
    EXPECT_EQ(mixed.walls[0].offset, 0.0);

    const auto rank2 = polyfit::detect_walls(torus_of("rank2"));
    ASSERT_EQ(rank2.size(), 2u);
    for (const auto& w : rank2.walls) {
        EXPECT_EQ(w.offset, 0.0);
        EXPECT_NEAR(w.normal.norm(), 1.0, 1e-12);
        EXPECT_EQ(w.normal.cwiseAbs().maxCoeff(), 1.0);
    }
    EXPECT_NE(rank2.walls[0].normal, rank2.walls[1].normal);
}

TEST(Walls, DuplicateColumnsAreMerged)
{
    IntMatrix W(2, 3);
    W << 1, 1, 0, 0, 0, 1;
    const auto walls = polyfit::detect_walls(model::make_torus_model(W, Vector::Zero(2), Box::cube(2, 0.0, 1.0)));
    EXPECT_EQ(walls.size(), 2u);
}

TEST(Breakpoints, TentHasOneAtTheOrigin)
{
    const auto d = simulate("tent");
    const auto walls = polyfit::detect_breakpoints_empirical(d);
    ASSERT_EQ(walls.size(), 1u);
    EXPECT_LE(std::abs(walls.walls[0].offset), d.grid.width(0));
}

TEST(Breakpoints, SmoothDensitiesHaveNone)
{
    EXPECT_TRUE(polyfit::detect_breakpoints_empirical(simulate("sphere")).empty());
    EXPECT_TRUE(polyfit::detect_breakpoints_empirical(simulate("hopf")).empty());
}

TEST(Breakpoints, TooFewBinsIsAnError)
{
    EXPECT_THROW(polyfit::detect_breakpoints_empirical(simulate("sphere", 100000, 1, 15)), ConfigError);
}

TEST(Fits, HopfIsLinearWithSlopeFourPiSquared)
{
    const auto fits = polyfit::fit_chamber_polynomials(simulate("hopf"), polyfit::detect_walls(torus_of("hopf")), 2);
    ASSERT_EQ(fits.size(), 1u);
    EXPECT_EQ(fits[0].degree, 1);
    EXPECT_TRUE(fits[0].pass);
    EXPECT_NEAR(coefficient(fits[0], 1), 4.0 * kPi * kPi, 0.02 * 4.0 * kPi * kPi);
}

TEST(Fits, SphereIsConstantTwoPi)
{
    const auto m = catalog::catalog_get("sphere");
    const auto fits = polyfit::fit_chamber_polynomials(simulate("sphere"), model_walls(m), 1);
    ASSERT_EQ(fits.size(), 1u);
    EXPECT_EQ(fits[0].degree, 0);
    EXPECT_NEAR(coefficient(fits[0], 0), 2.0 * kPi, 0.01 * 2.0 * kPi);
}

TEST(Fits, TentHasTwoLinearChambers)
{
    const auto d = simulate("tent");
    const auto fits = polyfit::fit_chamber_polynomials(d, polyfit::detect_breakpoints_empirical(d), 2);
    ASSERT_EQ(fits.size(), 2u);
    std::vector<double> slopes;
    for (const auto& f : fits) {
        EXPECT_EQ(f.degree, 1);
        EXPECT_TRUE(f.pass);
        slopes.push_back(coefficient(f, 1));
    }
    std::sort(slopes.begin(), slopes.end());
    const double s = 4.0 * kPi * kPi;
    EXPECT_NEAR(slopes[0], -s, 0.02 * s);
    EXPECT_NEAR(slopes[1], s, 0.02 * s);
}

TEST(Fits, UnderdeterminedChamberIsSkipped)
{
    auto d = simulate("hopf", 100000, 1, 16);
    // leave only two usable bins
    for (std::size_t k = 2; k < d.boundary_flags.size(); ++k) d.boundary_flags[k] = true;
    for (std::size_t k = 0; k < 2; ++k) d.boundary_flags[k] = false;
    const auto fits = polyfit::fit_chamber_polynomials(d, {}, 2);
    ASSERT_EQ(fits.size(), 1u);
    EXPECT_EQ(fits[0].degree, 0);
    d.boundary_flags[1] = true;
    const auto lone = polyfit::fit_chamber_polynomials(d, {}, 2);
    ASSERT_EQ(lone.size(), 1u);
    EXPECT_TRUE(lone[0].skipped);
}

TEST(Fits, CoefficientsAgreeWithTheExactDensity)
{
    for (const char* name : {"disc", "hopf", "weighted", "surface_product", "surface_product_hopf", "swap_quotient"}) {
        const auto m = catalog::catalog_get(name);
        const auto exact = pushforward::dh_exact_linear(m);
        const auto& live = exact.pieces.back();
        const auto fits = polyfit::fit_chamber_polynomials(simulate(name, 1000000, 11), polyfit::detect_walls(*model::torus_part(m)),
                                                           model::torus_part(m)->n);
        ASSERT_EQ(fits.size(), 1u) << name;
        const auto& f = fits[0];
        ASSERT_TRUE(f.pass) << name;
        for (const auto& e : f.basis) {
            const double diff = f.polynomial.coefficient(e) - live.coefficient(e);
            EXPECT_LT(std::abs(diff), 3.0 * f.coefficient_sigma(e)) << name << " degree " << e[0];
        }
    }
}

TEST(Verdict, LinearCatalogModelsArePolynomial)
{
    for (const char* name : {"disc", "hopf", "weighted", "surface_product", "surface_product_hopf", "swap_quotient", "rank2"}) {
        const auto m = catalog::catalog_get(name);
        const auto walls = polyfit::detect_walls(*model::torus_part(m));
        const auto v = polyfit::polynomiality_verdict(polyfit::fit_chamber_polynomials(simulate(name, 1000000, 2, name == std::string("rank2") ? 16 : 64), walls, 2), walls);
        EXPECT_TRUE(v.polynomial) << name << "\n" << v.report.dump(1);
    }
}

TEST(Verdict, ExponentialControlIsRejected)
{
    const auto d = synthetic(0.0, 2.0, 64, [](double t) { return std::exp(t); }, 1e-3);
    const auto v = polyfit::polynomiality_verdict(polyfit::fit_chamber_polynomials(d, {}, 2));
    EXPECT_FALSE(v.polynomial);
}

TEST(Verdict, CubicControlIsAcceptedAtCapThree)
{
    const auto d = synthetic(0.0, 2.0, 64, [](double t) { return t * t * t * t / 4.0 + t; }, 1e-3);
    EXPECT_TRUE(polyfit::polynomiality_verdict(polyfit::fit_chamber_polynomials(d, {}, 3)).polynomial);
    EXPECT_FALSE(polyfit::polynomiality_verdict(polyfit::fit_chamber_polynomials(d, {}, 2)).polynomial);
}

TEST(Verdict, EmptyFitListIsAnError)
{
    EXPECT_THROW(polyfit::polynomiality_verdict({}), ConfigError);
}

TEST(Transport, FitCommutesWithIntegralAffineTransition)
{
    const auto m = catalog::catalog_get("weighted");
    const auto d = simulate("weighted", 1000000, 4);
    const auto walls = polyfit::detect_walls(*model::torus_part(m));
    const AffineTransition tr{{{Rational(-1)}}, {Rational(3, 2)}};
    ASSERT_TRUE(is_integral_affine(tr));

    const auto before = polyfit::fit_chamber_polynomials(d, walls, 2);
    const auto after = polyfit::fit_chamber_polynomials(polyfit::transport(d, tr), polyfit::transport(walls, tr), 2);
    ASSERT_EQ(before.size(), 1u);
    ASSERT_EQ(after.size(), 1u);
    ASSERT_EQ(before[0].degree, after[0].degree);
    const auto moved = apply_transition(before[0].polynomial, tr);
    for (const auto& e : after[0].basis) {
        EXPECT_LT(std::abs(after[0].polynomial.coefficient(e) - moved.coefficient(e)), 3.0 * after[0].coefficient_sigma(e) + 1e-9);
    }
}

TEST(Transport, SwapOfRankTwoGrid)
{
    const auto d = simulate("rank2", 200000, 3, 8);
    const AffineTransition swap{{{Rational(0), Rational(1)}, {Rational(1), Rational(0)}}, {Rational(0), Rational(0)}};
    const auto moved = polyfit::transport(d, swap);
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) EXPECT_EQ(moved.mass[moved.grid.ravel({j, i})], d.mass[d.grid.ravel({i, j})]);
    }
    const AffineTransition shear{{{Rational(1), Rational(1)}, {Rational(0), Rational(1)}}, {Rational(0), Rational(0)}};
    EXPECT_THROW(polyfit::transport(d, shear), DomainError);
}

TEST(Stability, DoublingSamplesDoesNotRaiseTheDegree)
{
    int trials = 0, stable = 0;
    for (const char* name : {"disc", "hopf", "weighted", "sphere"}) {
        const auto m = catalog::catalog_get(name);
        const WallSet walls = model::is_weight_based(m) ? polyfit::detect_walls(*model::torus_part(m)) : model_walls(m);
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto a = polyfit::fit_chamber_polynomials(simulate(name, 200000, seed), walls, 2);
            const auto b = polyfit::fit_chamber_polynomials(simulate(name, 400000, seed + 1000), walls, 2);
            ++trials;
            stable += b[0].degree <= a[0].degree;
        }
    }
    EXPECT_GE(stable, static_cast<int>(std::ceil(0.95 * trials)));
}
