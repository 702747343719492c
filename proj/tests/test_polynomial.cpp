#include <gtest/gtest.h>

#include "dhlab/polynomial.hpp"
#include "dhlab/rng.hpp"

using namespace dhlab;

namespace {

using RPoly = Polynomial<Rational>;

AffineTransition transition(std::vector<std::vector<Rational>> A, std::vector<Rational> b) { return {std::move(A), std::move(b)}; }

/// Random element of GL(q, Z) as a product of elementary integer moves.
AffineTransition random_integral_transition(SubstreamRng& rng, int q)
{
    std::vector<std::vector<Rational>> A(static_cast<std::size_t>(q), std::vector<Rational>(static_cast<std::size_t>(q), Rational(0)));
    for (int i = 0; i < q; ++i) A[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 1;
    for (int step = 0; step < 6; ++step) {
        const auto i = static_cast<std::size_t>(rng.uniform() * q);
        const auto j = static_cast<std::size_t>(rng.uniform() * q);
        const double pick = rng.uniform();
        if (pick < 0.2) {
            for (auto& v : A[i]) v = -v;
        } else if (i != j && pick < 0.4) {
            std::swap(A[i], A[j]);
        } else if (i != j) {
            const Rational k(static_cast<long>(std::floor(rng.uniform(-3.0, 4.0))));
            for (std::size_t c = 0; c < static_cast<std::size_t>(q); ++c) A[i][c] += k * A[j][c];
        }
    }
    std::vector<Rational> b;
    for (int i = 0; i < q; ++i) b.emplace_back(static_cast<long>(std::floor(rng.uniform(-20.0, 20.0))), 7);
    return {A, b};
}

RPoly random_polynomial(SubstreamRng& rng, int q, int degree)
{
    RPoly p(q);
    for (int term = 0; term < 6; ++term) {
        Multidegree d(static_cast<std::size_t>(q), 0);
        int left = static_cast<int>(rng.uniform() * (degree + 1));
        for (int i = 0; i < q && left > 0; ++i) {
            const int e = i == q - 1 ? left : static_cast<int>(rng.uniform() * (left + 1));
            d[static_cast<std::size_t>(i)] = e;
            left -= e;
        }
        p.set(d, p.coefficient(d) + Rational(static_cast<long>(std::floor(rng.uniform(-9.0, 10.0))), 1 + static_cast<long>(rng.uniform() * 5)));
    }
    return p;
}

}  // namespace

TEST(Transition, TranslatingLinearPolynomial)
{
    const RPoly p = RPoly::variable(1, 0);
    const RPoly out = apply_transition(p, transition({{1}}, {1}));
    EXPECT_EQ(out, RPoly::variable(1, 0) - RPoly::constant(1, 1));
}

TEST(Transition, ConstantsAreFixed)
{
    const RPoly one = RPoly::constant(2, 1);
    EXPECT_EQ(apply_transition(one, transition({{1, 1}, {0, 1}}, {Rational(3, 2), -4})), one);
}

TEST(Transition, CoordinateSwap)
{
    const RPoly p = RPoly::variable(2, 0);
    EXPECT_EQ(apply_transition(p, transition({{0, 1}, {1, 0}}, {0, 0})), RPoly::variable(2, 1));
}

TEST(Transition, IntegralAffineMembership)
{
    EXPECT_TRUE(is_integral_affine(transition({{1, 1}, {0, 1}}, {Rational(1, 3), 5})));
    EXPECT_FALSE(is_integral_affine(transition({{2}}, {0})));
    EXPECT_FALSE(is_integral_affine(transition({{Rational(1, 2)}}, {0})));
}

TEST(Transition, RoundTripIsExactAndPreservesDegree)
{
    SubstreamRng rng(5, 0);
    for (int trial = 0; trial < 100; ++trial) {
        const int q = 1 + trial % 2;
        const AffineTransition t = random_integral_transition(rng, q);
        ASSERT_TRUE(is_integral_affine(t));
        const RPoly p = random_polynomial(rng, q, 4);
        const RPoly moved = apply_transition(p, t);
        EXPECT_EQ(moved.degree(), p.degree());
        EXPECT_EQ(apply_transition(moved, inverse(t)), p);
    }
}

TEST(Polynomial, CanonicalZeroingAndDegreeCap)
{
    Polynomial<double> p(1, 2);
    p.set({1}, 1e-15);
    EXPECT_TRUE(p.is_zero());
    EXPECT_EQ(p.degree(), -1);
    EXPECT_THROW(p.set({3}, 1.0), ConfigError);
}

TEST(Polynomial, EvaluationAndArithmetic)
{
    // (1 + t)(1 - t) = 1 - t^2
    const auto t = Polynomial<double>::variable(1, 0);
    const auto one = Polynomial<double>::constant(1, 1.0);
    const auto p = (one + t) * (one - t);
    EXPECT_DOUBLE_EQ(p(0.5), 0.75);
    EXPECT_EQ(p.degree(), 2);
}

TEST(Polynomial, JsonRoundTrip)
{
    SubstreamRng rng(9, 0);
    const RPoly p = random_polynomial(rng, 2, 3);
    EXPECT_EQ(polynomial_from_json<Rational>(to_json(p)), p);
    const AffineTransition t = random_integral_transition(rng, 2);
    const AffineTransition back = transition_from_json(to_json(t));
    EXPECT_EQ(back.A, t.A);
    EXPECT_EQ(back.b, t.b);
}

TEST(Polynomial, JsonRejectsUnknownFields)
{
    nlohmann::json j = to_json(RPoly::variable(1, 0));
    j["colour"] = "blue";
    EXPECT_THROW(polynomial_from_json<Rational>(j), ConfigError);
}
