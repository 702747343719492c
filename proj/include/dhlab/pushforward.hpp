#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dhlab/box.hpp"
#include "dhlab/errors.hpp"
#include "dhlab/grid.hpp"
#include "dhlab/model.hpp"
#include "dhlab/parallel.hpp"
#include "dhlab/polynomial.hpp"
#include "dhlab/polytope.hpp"
#include "dhlab/sampling.hpp"
#include "dhlab/walls.hpp"

namespace dhlab::pushforward {

using model::Matrix;
using model::Vector;

/// Histogram estimate of the DH measure on a grid, in chart Lebesgue units.
struct BinnedDensity {
    Grid grid;
    std::vector<double> mass;
    std::vector<double> variance;
    std::uint64_t samples = 0;
    std::uint64_t seed = 0;
    std::vector<bool> boundary_flags;

    double total_mass() const
    {
        double s = 0.0;
        for (double m : mass) s += m;
        return s;
    }

    double density(std::size_t k) const { return mass[k] / grid.cell_volume(); }
    double sigma(std::size_t k) const { return std::sqrt(variance[k]) / grid.cell_volume(); }

    /// Variance of the total mass, recovered from the per-bin second moments.
    double total_variance() const
    {
        if (samples == 0) return 0.0;
        const double n = static_cast<double>(samples);
        double second = 0.0;
        for (std::size_t k = 0; k < mass.size(); ++k) second += variance[k] + mass[k] * mass[k] / n;
        const double total = total_mass();
        return std::max(0.0, second - total * total / n);
    }
};

/**
 * Flags bins lying within one bin width of a face of the model window or of
 * a wall. `extra` adds further walls (for example empirically detected ones).
 */
inline std::vector<bool> boundary_flags(const model::HamiltonianModel& m, const Grid& grid, const WallSet& extra = {})
{
    const Box& win = model::window(m);
    const WallSet walls = model_walls(m);
    std::vector<bool> flags(grid.size(), false);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const Box cell = grid.cell(k);
        bool flag = false;
        for (int a = 0; a < grid.dim() && !flag; ++a) {
            const double w = grid.width(a);
            flag = cell.lo(a) < win.lo(a) + w - 1e-12 || cell.hi(a) > win.hi(a) - w + 1e-12;
        }
        for (const auto* set : {&walls, &extra}) {
            for (const auto& wall : set->walls) flag = flag || wall_touches(wall, cell, grid.max_width());
        }
        flags[k] = flag;
    }
    return flags;
}

/**
 * Monte Carlo estimate of the pushforward of Liouville measure under mu,
 * binned on `grid`. Each of the sampler's fixed substreams fills its own
 * partial histogram and the partials are merged in substream order, so the
 * result is bitwise independent of `threads`.
 */
inline BinnedDensity dh_monte_carlo(const model::HamiltonianModel& m, const Grid& grid, std::uint64_t samples,
                                    std::uint64_t seed, unsigned threads = default_threads())
{
    if (samples < 10000) throw ConfigError("dh_monte_carlo needs at least 1e4 samples");
    if (grid.dim() != model::rank(m)) throw DomainError("grid dimension differs from the model rank");
    ++trace::pushforward_runs;
    const model::WindowSampler sampler(m, grid.box());

    const std::size_t bins = grid.size();
    const auto streams = static_cast<std::size_t>(model::WindowSampler::kSubstreams);
    std::vector<std::vector<double>> sum(streams), sum_sq(streams);
    parallel_for(streams, threads, [&](std::size_t k) {
        sum[k].assign(bins, 0.0);
        sum_sq[k].assign(bins, 0.0);
        sampler.run_substream(seed, k, samples, [&](const Vector&, const Vector& mu, double w) {
            if (auto idx = grid.locate(mu)) {
                sum[k][*idx] += w;
                sum_sq[k][*idx] += w * w;
            }
        });
    });

    BinnedDensity d;
    d.grid = grid;
    d.samples = samples;
    d.seed = seed;
    d.mass.assign(bins, 0.0);
    d.variance.assign(bins, 0.0);
    std::vector<double> second(bins, 0.0);
    for (std::size_t k = 0; k < streams; ++k) {
        for (std::size_t b = 0; b < bins; ++b) {
            d.mass[b] += sum[k][b];
            second[b] += sum_sq[k][b];
        }
    }
    const double n = static_cast<double>(samples);
    for (std::size_t b = 0; b < bins; ++b) d.variance[b] = std::max(0.0, second[b] - d.mass[b] * d.mass[b] / n);
    d.boundary_flags = boundary_flags(m, grid);
    return d;
}

// ---- exact rank-one densities ----------------------------------------------

/// Piecewise polynomial in one variable; pieces[i] lives between breakpoints[i-1] and breakpoints[i].
struct PiecewisePoly1D {
    std::vector<double> breakpoints;
    std::vector<Polynomial<double>> pieces;

    std::size_t piece_index(double t) const
    {
        std::size_t i = 0;
        while (i < breakpoints.size() && t >= breakpoints[i]) ++i;
        return i;
    }

    double operator()(double t) const { return pieces[piece_index(t)](t); }

    /// Exact integral over [a, b].
    double integrate(double a, double b) const
    {
        if (b < a) return -integrate(b, a);
        double total = 0.0;
        double lo = a;
        while (lo < b) {
            const std::size_t i = piece_index(lo);
            const double hi = i < breakpoints.size() ? std::min(b, breakpoints[i]) : b;
            for (const auto& [d, c] : pieces[i].coefficients()) {
                const int e = d[0] + 1;
                total += c * (std::pow(hi, e) - std::pow(lo, e)) / e;
            }
            lo = hi;
        }
        return total;
    }

    nlohmann::json to_json() const
    {
        nlohmann::json pcs = nlohmann::json::array();
        for (const auto& p : pieces) pcs.push_back(dhlab::to_json(p));
        return {{"breakpoints", breakpoints}, {"pieces", pcs}};
    }
};

/**
 * Exact DH density of a rank-one weight model: the pushforward of
 * (2 pi)^n Lebesgue measure on the action orthant under t = sum a_j u_j + c,
 * assembled as an iterated convolution of the kernels (2 pi / |a_j|) 1_{s > 0}
 * in exact rational arithmetic. Mixed signs make the moment map non-proper.
 */
inline PiecewisePoly1D dh_exact_linear(const model::TorusWeightModel& t)
{
    if (t.q != 1) throw UnsupportedRankError("exact DH density is implemented for rank one only");
    int sign = 0;
    for (int j = 0; j < t.n; ++j) {
        const auto a = t.weights(0, j);
        if (a == 0) throw DegeneracyError("zero weight: the fixed set is not isolated");
        const int s = a > 0 ? 1 : -1;
        if (sign != 0 && s != sign) throw DomainError("weights of mixed sign: moment map is not proper");
        sign = s;
    }

    // kernel convolution on s = sign * (t - c) > 0; p(s) = sum_k coeff[k] s^k
    std::vector<Rational> coeff{Rational(1, std::abs(t.weights(0, 0)))};
    for (int j = 1; j < t.n; ++j) {
        const Rational k(1, std::abs(t.weights(0, j)));
        std::vector<Rational> next(coeff.size() + 1, Rational(0));
        for (std::size_t e = 0; e < coeff.size(); ++e) next[e + 1] = k * coeff[e] / Rational(static_cast<long>(e + 1));
        coeff = std::move(next);
    }

    // expand sum_k coeff[k] (sign (t - c))^k in powers of t
    const double c = t.offset(0);
    const double scale = std::pow(model::kTwoPi, t.n);
    std::vector<double> expanded(coeff.size(), 0.0);
    for (std::size_t k = 0; k < coeff.size(); ++k) {
        const double ck = coeff[k].convert_to<double>() * scale * std::pow(sign, static_cast<double>(k));
        double binom = 1.0;
        for (std::size_t i = 0; i <= k; ++i) {
            expanded[i] += ck * binom * std::pow(-c, static_cast<double>(k - i));
            binom = binom * static_cast<double>(k - i) / static_cast<double>(i + 1);
        }
    }
    Polynomial<double> live(1);
    for (std::size_t i = 0; i < expanded.size(); ++i) live.set({static_cast<int>(i)}, expanded[i]);

    PiecewisePoly1D out;
    out.breakpoints = {c};
    out.pieces = sign > 0 ? std::vector<Polynomial<double>>{Polynomial<double>(1), live}
                          : std::vector<Polynomial<double>>{live, Polynomial<double>(1)};
    return out;
}

/// Exact density for any rank-one weight-based model (surface factors multiply by the area).
inline PiecewisePoly1D dh_exact_linear(const model::HamiltonianModel& m)
{
    const auto* t = model::torus_part(m);
    if (!t) throw DomainError("exact DH density needs a weight model");
    PiecewisePoly1D out = dh_exact_linear(*t);
    if (auto* p = std::get_if<model::SurfaceProduct>(&m.kind)) {
        for (auto& piece : out.pieces) piece = piece * p->surface.area;
    }
    return out;
}

// ---- normalization audit ---------------------------------------------------

struct MassCheck {
    double total = 0.0;
    double reference = 0.0;
    double sigma = 0.0;
    double z = 0.0;
    bool empty = false;
};

/// Liouville volume of mu^{-1}(box) computed without the sampler where possible.
inline double reference_liouville_volume(const model::HamiltonianModel& m, const Box& box, std::uint64_t seed = 0x7e57)
{
    if (const auto* t = model::torus_part(m)) {
        double v = std::pow(model::kTwoPi, t->n) * polytope_volume(model::action_region(*t, box));
        if (auto* p = std::get_if<model::SurfaceProduct>(&m.kind)) v *= p->surface.area;
        return v;
    }
    const auto& c = std::get<model::ChartModel>(m.kind);
    if (c.liouville_volume) return c.liouville_volume(box);
    double v = 0.0;
    for (const auto& p : model::sample_window(m, 1000000, seed, box)) v += p.weight;
    return v;
}

/// Deviation of the histogram's total mass from the Liouville volume of mu^{-1}(grid box), in sigma units.
inline MassCheck total_mass_check(const BinnedDensity& d, const model::HamiltonianModel& m)
{
    MassCheck r;
    r.total = d.total_mass();
    if (d.mass.empty() || d.samples == 0 || r.total == 0.0) {
        r.empty = true;
        return r;
    }
    r.reference = reference_liouville_volume(m, d.grid.box());
    r.sigma = std::sqrt(d.total_variance());
    const double diff = r.total - r.reference;
    if (r.sigma > 0.0) {
        r.z = diff / r.sigma;
    } else {
        // zero-variance estimators (constant weights, full acceptance) agree up to rounding
        r.z = std::abs(diff) <= 1e-9 * std::abs(r.reference) ? 0.0 : INFINITY;
    }
    return r;
}

// ---- output ----------------------------------------------------------------

inline std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// CSV with columns t_1..t_q, mass, density, sigma, boundary_flag (t at bin centers).
inline std::string to_csv(const BinnedDensity& d)
{
    std::string out;
    const int q = d.grid.dim();
    for (int i = 0; i < q; ++i) out += "t_" + std::to_string(i + 1) + ",";
    out += "mass,density,sigma,boundary_flag\n";
    for (std::size_t k = 0; k < d.mass.size(); ++k) {
        const Vector c = d.grid.center(k);
        for (int i = 0; i < q; ++i) out += format_double(c(i)) + ",";
        out += format_double(d.mass[k]) + "," + format_double(d.density(k)) + "," + format_double(d.sigma(k)) + "," +
               (d.boundary_flags[k] ? "1" : "0") + "\n";
    }
    return out;
}

}  // namespace dhlab::pushforward
