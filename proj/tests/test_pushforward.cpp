#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "dhlab/catalog.hpp"
#include "dhlab/pushforward.hpp"
#include "dhlab/rng.hpp"

using namespace dhlab;
using model::Vector;

namespace {

constexpr double kPi = std::numbers::pi;

model::HamiltonianModel weight_model(const std::vector<std::int64_t>& w, double offset = 0.0, double lo = 0.0, double hi = 1.0)
{
    IntMatrix W(1, static_cast<Eigen::Index>(w.size()));
    for (std::size_t j = 0; j < w.size(); ++j) W(0, static_cast<Eigen::Index>(j)) = w[j];
    return {"w", model::make_torus_model(W, Vector::Constant(1, offset), Box::interval(lo, hi))};
}

// (2 pi)^n t^(n-1) / ((n-1)! prod a_j) for positive weights
double closed_form_density(const std::vector<std::int64_t>& w, double t)
{
    if (t <= 0.0) return 0.0;
    const int n = static_cast<int>(w.size());
    double v = std::pow(2.0 * kPi, n) * std::pow(t, n - 1) / std::tgamma(n);
    for (auto a : w) v /= static_cast<double>(a);
    return v;
}

struct Agreement {
    std::size_t unflagged = 0;
    std::size_t within = 0;
};

template <typename Exact>
Agreement compare_bins(const pushforward::BinnedDensity& d, Exact&& exact_bin_mass)
{
    Agreement a;
    for (std::size_t k = 0; k < d.grid.size(); ++k) {
        if (d.boundary_flags[k]) continue;
        ++a.unflagged;
        const double diff = std::abs(d.mass[k] - exact_bin_mass(d.grid.cell(k)));
        a.within += diff < 3.0 * std::sqrt(d.variance[k]);
    }
    return a;
}

}  // namespace

TEST(MonteCarlo, SphereDensityIsTwoPi)
{
    const auto m = catalog::catalog_get("sphere");
    const auto d = pushforward::dh_monte_carlo(m, Grid::uniform(Box::interval(-0.9, 0.9), 36), 1000000, 1);
    for (std::size_t k = 0; k < d.grid.size(); ++k) {
        const double tol = std::max(3.0 * d.sigma(k), 1e-9);
        EXPECT_NEAR(d.density(k), 2.0 * kPi, tol) << k;
    }
}

TEST(MonteCarlo, HopfDensityIsLinear)
{
    const auto m = catalog::catalog_get("hopf");
    const auto d = pushforward::dh_monte_carlo(m, Grid::uniform(Box::interval(0.1, 1.0), 18), 1000000, 2);
    const auto a = compare_bins(d, [](const Box& c) { return 2.0 * kPi * kPi * (c.hi(0) * c.hi(0) - c.lo(0) * c.lo(0)); });
    EXPECT_GE(a.within, static_cast<std::size_t>(0.9 * static_cast<double>(a.unflagged)));
}

TEST(MonteCarlo, TwoSphereDensityIsATent)
{
    const auto m = catalog::catalog_get("tent");
    const auto d = pushforward::dh_monte_carlo(m, Grid::uniform(Box::interval(-1.9, 1.9), 38), 1000000, 3);
    // integral of 4 pi^2 (2 - |t|) over the bin
    const auto F = [](double t) { return 4.0 * kPi * kPi * (2.0 * t - 0.5 * t * std::abs(t)); };
    const auto a = compare_bins(d, [&](const Box& c) { return F(c.hi(0)) - F(c.lo(0)); });
    EXPECT_GE(a.within, static_cast<std::size_t>(0.9 * static_cast<double>(a.unflagged)));
}

TEST(MonteCarlo, TooFewSamplesIsAConfigError)
{
    EXPECT_THROW(pushforward::dh_monte_carlo(catalog::catalog_get("disc"), Grid::uniform(Box::interval(0.0, 1.0), 4), 9999, 1),
                 ConfigError);
}

TEST(MonteCarlo, EmptyRegionPropagates)
{
    EXPECT_THROW(pushforward::dh_monte_carlo(catalog::catalog_get("disc"), Grid::uniform(Box::interval(-2.0, -1.0), 4), 10000, 1),
                 EmptyRegionError);
}

TEST(Exact, Examples)
{
    const auto disc = pushforward::dh_exact_linear(catalog::catalog_get("disc"));
    EXPECT_DOUBLE_EQ(disc(0.37), 2.0 * kPi);
    EXPECT_EQ(disc(-0.1), 0.0);
    const auto hopf = pushforward::dh_exact_linear(catalog::catalog_get("hopf"));
    EXPECT_NEAR(hopf(0.6), 4.0 * kPi * kPi * 0.6, 1e-12);
    const auto weighted = pushforward::dh_exact_linear(catalog::catalog_get("weighted"));
    EXPECT_NEAR(weighted(0.6), 2.0 * kPi * kPi * 0.6, 1e-12);
}

TEST(Exact, MatchesClosedFormForRandomPositiveWeights)
{
    SubstreamRng rng(21, 0);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform() * 5);
        std::vector<std::int64_t> w;
        for (int j = 0; j < n; ++j) w.push_back(1 + static_cast<std::int64_t>(rng.uniform() * 4));
        const auto p = pushforward::dh_exact_linear(weight_model(w));
        for (double t : {0.01, 0.3, 1.0, 2.7}) {
            const double expect = closed_form_density(w, t);
            EXPECT_NEAR(p(t), expect, 1e-11 * std::max(1.0, expect));
        }
    }
}

TEST(Exact, OffsetShiftsTheBreakpoint)
{
    const auto p = pushforward::dh_exact_linear(weight_model({1, 1}, 0.5, 0.5, 1.5));
    ASSERT_EQ(p.breakpoints.size(), 1u);
    EXPECT_DOUBLE_EQ(p.breakpoints[0], 0.5);
    EXPECT_NEAR(p(1.25), 4.0 * kPi * kPi * 0.75, 1e-12);
}

TEST(Exact, NegativeWeightsReflect)
{
    const auto p = pushforward::dh_exact_linear(weight_model({-1, -1}, 0.0, -1.0, 0.0));
    EXPECT_NEAR(p(-0.4), 4.0 * kPi * kPi * 0.4, 1e-12);
    EXPECT_EQ(p(0.4), 0.0);
}

TEST(Exact, ErrorPaths)
{
    EXPECT_THROW(pushforward::dh_exact_linear(weight_model({1, -1})), DomainError);
    EXPECT_THROW(pushforward::dh_exact_linear(catalog::catalog_get("rank2")), UnsupportedRankError);
    EXPECT_THROW(pushforward::dh_exact_linear(catalog::catalog_get("sphere")), DomainError);
}

TEST(Exact, ContinuousAtTheBreakpointAndNonnegative)
{
    for (const auto& w : std::vector<std::vector<std::int64_t>>{{1, 1}, {1, 2}, {2, 3, 1}, {1, 1, 1, 1}}) {
        const auto p = pushforward::dh_exact_linear(weight_model(w));
        const double c = p.breakpoints[0];
        EXPECT_NEAR(p.pieces[0](c), p.pieces[1](c), 1e-12);
        // each piece on its own interval: (c - 1, c) and (c, c + 1)
        for (int k = 0; k < 100; ++k) {
            EXPECT_GE(p.pieces[0](c - 0.01 * (k + 1)), 0.0);
            EXPECT_GE(p.pieces[1](c + 0.01 * (k + 1)), 0.0);
        }
    }
}

TEST(Exact, SurfaceFactorMultipliesByArea)
{
    const auto p = pushforward::dh_exact_linear(catalog::catalog_get("surface_product", 3.0));
    EXPECT_NEAR(p(0.5), 6.0 * kPi, 1e-12);
}

TEST(Exact, IntegrateMatchesAntiderivative)
{
    const auto p = pushforward::dh_exact_linear(weight_model({1, 1, 1}));
    // (2 pi)^3 t^2 / 2 integrates to (2 pi)^3 t^3 / 6
    EXPECT_NEAR(p.integrate(-0.5, 0.8), std::pow(2.0 * kPi, 3) * 0.512 / 6.0, 1e-10);
}

TEST(Agreement, MonteCarloMatchesExactAcrossRankOneWeightCatalog)
{
    for (const char* name : {"disc", "hopf", "weighted", "surface_product", "surface_product_hopf", "swap_quotient"}) {
        const auto e = catalog::catalog_entry(name);
        const auto exact = pushforward::dh_exact_linear(e.model);
        const auto d = pushforward::dh_monte_carlo(e.model, Grid::uniform(e.default_grid, 64), 1000000, 5);
        const auto a = compare_bins(d, [&](const Box& c) { return exact.integrate(c.lo(0), c.hi(0)); });
        ASSERT_GT(a.unflagged, 0u);
        EXPECT_GE(static_cast<double>(a.within), 0.95 * static_cast<double>(a.unflagged)) << name;
    }
}

TEST(Equivariance, OffsetShiftMovesTheHistogramByWholeBins)
{
    const double c = 0.25;
    const auto base = weight_model({1, 2}, 0.0, 0.0, 1.0);
    const auto moved = weight_model({1, 2}, c, c, 1.0 + c);
    const auto d0 = pushforward::dh_monte_carlo(base, Grid::uniform(Box::interval(0.0, 1.0), 32), 200000, 9);
    const auto d1 = pushforward::dh_monte_carlo(moved, Grid::uniform(Box::interval(c, 1.0 + c), 32), 200000, 9);
    // identical action samples; only rounding at bin edges may move a sample
    std::size_t mismatched = 0;
    for (std::size_t k = 0; k < d0.mass.size(); ++k) mismatched += std::abs(d0.mass[k] - d1.mass[k]) > 1e-12 * d0.mass[k];
    EXPECT_LE(mismatched, 2u);
    EXPECT_NEAR(d0.total_mass(), d1.total_mass(), 1e-9 * d0.total_mass());
}

TEST(Determinism, SameSeedIsBitwiseIdenticalAcrossThreadCounts)
{
    const auto m = catalog::catalog_get("weighted");
    const Grid g = Grid::uniform(Box::interval(0.0, 1.0), 20);
    const auto a = pushforward::dh_monte_carlo(m, g, 100000, 42, 1);
    const auto b = pushforward::dh_monte_carlo(m, g, 100000, 42, 4);
    const auto c = pushforward::dh_monte_carlo(m, g, 100000, 42, 1);
    EXPECT_EQ(a.mass, b.mass);
    EXPECT_EQ(a.variance, b.variance);
    EXPECT_EQ(a.mass, c.mass);
    EXPECT_EQ(pushforward::to_csv(a), pushforward::to_csv(b));
    EXPECT_NE(a.mass, pushforward::dh_monte_carlo(m, g, 100000, 43, 1).mass);
}

TEST(MassConservation, HistogramHoldsEverySampledWeight)
{
    for (const char* name : {"hopf", "tent", "rank2"}) {
        const auto e = catalog::catalog_entry(name);
        const Grid g = Grid::uniform(e.default_grid, 16);
        const auto d = pushforward::dh_monte_carlo(e.model, g, 50000, 8);
        double sampled = 0.0;
        for (const auto& p : model::sample_window(e.model, 50000, 8, e.default_grid)) sampled += p.weight;
        EXPECT_NEAR(d.total_mass(), sampled, 1e-12 * sampled) << name;
        const auto check = pushforward::total_mass_check(d, e.model);
        EXPECT_LT(std::abs(check.z), 4.0) << name;
    }
}

TEST(MassCheck, Examples)
{
    const auto disc = catalog::catalog_get("disc");
    const auto d = pushforward::dh_monte_carlo(disc, Grid::uniform(Box::interval(0.0, 1.0), 32), 100000, 1);
    const auto r = pushforward::total_mass_check(d, disc);
    EXPECT_NEAR(r.reference, 2.0 * kPi, 1e-12);
    EXPECT_LT(std::abs(r.z), 3.0);

    pushforward::BinnedDensity empty;
    const auto e = pushforward::total_mass_check(empty, disc);
    EXPECT_TRUE(e.empty);
    EXPECT_EQ(e.total, 0.0);

    const auto sphere = catalog::catalog_get("sphere");
    const auto s = pushforward::dh_monte_carlo(sphere, Grid::uniform(Box::interval(-1.0, 1.0), 32), 100000, 1);
    const auto rs = pushforward::total_mass_check(s, sphere);
    EXPECT_NEAR(rs.total, 4.0 * kPi, 1e-9);
    EXPECT_LT(std::abs(rs.z), 3.0);
}

TEST(Output, CsvHeaderAndRowCount)
{
    const auto d = pushforward::dh_monte_carlo(catalog::catalog_get("rank2"), Grid::uniform(Box::cube(2, 0.1, 0.9), 4), 10000, 1);
    const std::string csv = pushforward::to_csv(d);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t_1,t_2,mass,density,sigma,boundary_flag");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 17);
}
