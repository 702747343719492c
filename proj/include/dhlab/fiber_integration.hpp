#pragma once

#include <cmath>
#include <cstdint>
#include <functional>

#include <Eigen/Dense>

#include "dhlab/box.hpp"
#include "dhlab/errors.hpp"
#include "dhlab/lattice.hpp"
#include "dhlab/model.hpp"
#include "dhlab/reduction.hpp"
#include "dhlab/sampling.hpp"

namespace dhlab::lattice {

/// Test function on X of the form f(x) = g(mu(x)).
using MomentTestFunction = std::function<double(const Eigen::VectorXd& mu)>;

struct FiberIntegrationResult {
    double lhs = 0.0;
    double rhs = 0.0;
    double sigma = 0.0;     // standard error of the Monte Carlo side
    double residual = 0.0;  // |lhs - rhs| / |lhs|, or |lhs - rhs| when lhs = 0
    double z = 0.0;
};

/**
 * Compares the Liouville integral of f = g(mu) over mu^{-1}(window), by
 * Monte Carlo, with the leaf-space integral
 *   int_B iota * (int_{O_b} f) * vol_red(b) / iota dmu_aff(b),
 * assembled from exact orbit and fiber volumes by composite Gauss-Legendre
 * quadrature on the window. Weight-based models only.
 */
inline FiberIntegrationResult fiber_integration_check(const model::HamiltonianModel& m, const IntegralAffineData& data,
                                                      const MomentTestFunction& g, std::uint64_t samples,
                                                      std::uint64_t seed, int panels = 64)
{
    const auto* t = model::torus_part(m);
    if (!t) throw DomainError("fiber integration check needs a weight-based model");
    data.validate();
    if (data.q() != t->q) throw DomainError("lattice rank differs from model rank");
    const Box& win = t->window;

    FiberIntegrationResult r;
    double s1 = 0.0, s2 = 0.0;
    model::WindowSampler(m, win).run(seed, samples, [&](const Eigen::VectorXd&, const Eigen::VectorXd& mu, double w) {
        const double v = w * g(mu);
        s1 += v;
        s2 += v * v;
    });
    r.lhs = s1;
    r.sigma = std::sqrt(std::max(0.0, s2 - s1 * s1 / static_cast<double>(samples)));

    static constexpr double nodes[4] = {-0.86113631159405257522, -0.33998104358485626480, 0.33998104358485626480,
                                        0.86113631159405257522};
    static constexpr double weights[4] = {0.34785484513745385737, 0.65214515486254614263, 0.65214515486254614263,
                                          0.34785484513745385737};
    const int q = t->q;
    const double iota = data.iota_generic;
    const double affine = affine_density(data);
    const double orbit = reduction::orbit_volume(m, 0.5 * (win.lo + win.hi)).value;
    std::size_t points = 1;
    for (int a = 0; a < q; ++a) points *= static_cast<std::size_t>(4 * panels);
    Eigen::VectorXd b(q);
    double rhs = 0.0;
    for (std::size_t k = 0; k < points; ++k) {
        std::size_t rest = k;
        double w = 1.0;
        for (int a = 0; a < q; ++a) {
            const std::size_t i = rest % static_cast<std::size_t>(4 * panels);
            rest /= static_cast<std::size_t>(4 * panels);
            const double h = (win.hi(a) - win.lo(a)) / panels;
            const double lo = win.lo(a) + h * static_cast<double>(i / 4);
            b(a) = lo + 0.5 * h * (1.0 + nodes[i % 4]);
            w *= 0.5 * h * weights[i % 4];
        }
        const double gb = g(b);
        if (gb == 0.0) continue;
        const double vol_red = iota * (reduction::detail::exact_fiber_volume(*t, b).value / iota);
        rhs += w * gb * iota * orbit * vol_red * affine;
    }
    r.rhs = rhs;

    const double diff = std::abs(r.lhs - r.rhs);
    r.residual = r.lhs != 0.0 ? diff / std::abs(r.lhs) : diff;
    r.z = r.sigma > 0.0 ? diff / r.sigma : (diff == 0.0 ? 0.0 : INFINITY);
    return r;
}

}  // namespace dhlab::lattice
