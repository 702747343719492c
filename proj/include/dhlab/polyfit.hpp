#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dhlab/errors.hpp"
#include "dhlab/grid.hpp"
#include "dhlab/model.hpp"
#include "dhlab/polynomial.hpp"
#include "dhlab/pushforward.hpp"
#include "dhlab/walls.hpp"

namespace dhlab::polyfit {

using model::Matrix;
using model::Vector;
using pushforward::BinnedDensity;

inline constexpr double kChiSquareThreshold = 1.5;
inline constexpr double kBreakpointDeltaChi2 = 25.0;  // 5 sigma

inline WallSet detect_walls(const model::TorusWeightModel& t) { return cone_walls(t); }

namespace detail {

/// Average of t^e over [lo, hi].
inline double monomial_average(double lo, double hi, int e)
{
    return (std::pow(hi, e + 1) - std::pow(lo, e + 1)) / ((e + 1) * (hi - lo));
}

/// Multidegrees of total degree <= deg in q variables, graded then lexicographic.
inline std::vector<Multidegree> monomials(int q, int deg)
{
    std::vector<Multidegree> out;
    for (int total = 0; total <= deg; ++total) {
        Multidegree d(static_cast<std::size_t>(q), 0);
        std::function<void(int, int)> rec = [&](int axis, int left) {
            if (axis == q - 1) {
                d[static_cast<std::size_t>(axis)] = left;
                out.push_back(d);
                return;
            }
            for (int e = left; e >= 0; --e) {
                d[static_cast<std::size_t>(axis)] = e;
                rec(axis + 1, left - e);
            }
        };
        rec(0, total);
    }
    return out;
}

inline double cell_average(const Box& cell, const Multidegree& d)
{
    double v = 1.0;
    for (std::size_t a = 0; a < d.size(); ++a) {
        const auto ax = static_cast<Eigen::Index>(a);
        v *= monomial_average(cell.lo(ax), cell.hi(ax), d[a]);
    }
    return v;
}

struct WlsResult {
    Vector beta;
    Matrix covariance;
    double chi2 = 0.0;
    int dof = 0;
};

/// Weighted least squares of bin-averaged monomials against bin densities.
inline WlsResult weighted_fit(const BinnedDensity& d, const std::vector<std::size_t>& bins, const std::vector<Multidegree>& basis)
{
    const auto m = static_cast<Eigen::Index>(bins.size());
    const auto p = static_cast<Eigen::Index>(basis.size());
    Matrix X(m, p);
    Vector y(m);
    for (Eigen::Index r = 0; r < m; ++r) {
        const std::size_t k = bins[static_cast<std::size_t>(r)];
        const Box cell = d.grid.cell(k);
        const double inv = 1.0 / d.sigma(k);
        for (Eigen::Index c = 0; c < p; ++c) X(r, c) = cell_average(cell, basis[static_cast<std::size_t>(c)]) * inv;
        y(r) = d.density(k) * inv;
    }
    WlsResult res;
    const Eigen::ColPivHouseholderQR<Matrix> qr(X);
    res.beta = qr.solve(y);
    res.chi2 = (X * res.beta - y).squaredNorm();
    res.dof = static_cast<int>(m - p);
    res.covariance = (X.transpose() * X).inverse();
    return res;
}

}  // namespace detail

/**
 * Changepoints of a rank-one histogram. At every interior bin boundary a
 * straight line is fitted to the k bins on each side and to their union; the
 * boundary is a candidate when the union fit is worse by more than
 * kBreakpointDeltaChi2. Runs of adjacent candidates collapse to their
 * strongest member.
 */
inline WallSet detect_breakpoints_empirical(const BinnedDensity& d, int window_bins = 8)
{
    if (d.grid.dim() != 1) throw UnsupportedRankError("empirical breakpoints are implemented for rank one only");
    const int bins = d.grid.bins()[0];
    if (bins < 16) throw ConfigError("breakpoint detection needs at least 16 bins");
    const std::vector<Multidegree> line = detail::monomials(1, 1);

    auto usable = [&](int from, int to) {
        std::vector<std::size_t> out;
        for (int k = std::max(0, from); k < std::min(bins, to); ++k) {
            if (d.variance[static_cast<std::size_t>(k)] > 0.0) out.push_back(static_cast<std::size_t>(k));
        }
        return out;
    };

    std::vector<double> score(static_cast<std::size_t>(bins), 0.0);
    for (int b = 3; b <= bins - 3; ++b) {
        const auto left = usable(b - window_bins, b);
        const auto right = usable(b, b + window_bins);
        if (left.size() < 3 || right.size() < 3) continue;
        std::vector<std::size_t> both = left;
        both.insert(both.end(), right.begin(), right.end());
        const double split = detail::weighted_fit(d, left, line).chi2 + detail::weighted_fit(d, right, line).chi2;
        score[static_cast<std::size_t>(b)] = detail::weighted_fit(d, both, line).chi2 - split;
    }

    WallSet out;
    const double width = d.grid.width(0);
    for (int b = 0; b < bins;) {
        if (score[static_cast<std::size_t>(b)] <= kBreakpointDeltaChi2) {
            ++b;
            continue;
        }
        int best = b;
        int e = b;
        while (e < bins && score[static_cast<std::size_t>(e)] > kBreakpointDeltaChi2) {
            if (score[static_cast<std::size_t>(e)] > score[static_cast<std::size_t>(best)]) best = e;
            ++e;
        }
        const double pos = d.grid.box().lo(0) + best * width;
        out.walls.push_back(Wall{Vector::Ones(1), pos, Box::interval(pos, pos), {}});
        b = e;
    }
    return out;
}

struct ChamberFit {
    int chamber_id = 0;
    std::vector<int> signs;  // side of each wall, -1 or +1
    Polynomial<double> polynomial{1};
    std::vector<Multidegree> basis;
    Matrix covariance;
    double chi2 = 0.0;
    int dof = 0;
    int degree = -1;
    std::size_t bins_used = 0;
    bool pass = false;
    bool skipped = false;

    double reduced_chi2() const { return dof > 0 ? chi2 / dof : INFINITY; }

    /// Standard error of the coefficient of multidegree e (0 when absent from the basis).
    double coefficient_sigma(const Multidegree& e) const
    {
        for (std::size_t i = 0; i < basis.size(); ++i) {
            if (basis[i] == e) return std::sqrt(covariance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)));
        }
        return 0.0;
    }
};

/**
 * Chamber-wise polynomial fits. Bins that are flagged, carry no variance, or
 * meet a wall are left out; the rest are grouped by their sign vector with
 * respect to the walls. In each chamber the smallest degree up to `cap` with
 * chi2/dof <= threshold is selected.
 */
inline std::vector<ChamberFit> fit_chamber_polynomials(const BinnedDensity& d, const WallSet& walls, int cap,
                                                       double threshold = kChiSquareThreshold)
{
    if (cap < 0) throw ConfigError("degree cap must be nonnegative");
    const int q = d.grid.dim();
    std::map<std::vector<int>, std::vector<std::size_t>> groups;
    std::vector<std::vector<int>> order;
    for (std::size_t k = 0; k < d.grid.size(); ++k) {
        if (d.boundary_flags[k] || !(d.variance[k] > 0.0)) continue;
        const Box cell = d.grid.cell(k);
        bool straddles = false;
        for (const auto& w : walls.walls) straddles = straddles || wall_touches(w, cell);
        if (straddles) continue;
        std::vector<int> signs;
        const Vector c = d.grid.center(k);
        for (const auto& w : walls.walls) signs.push_back(w.signed_distance(c) < 0 ? -1 : 1);
        auto [it, inserted] = groups.try_emplace(signs);
        if (inserted) order.push_back(signs);
        it->second.push_back(k);
    }

    std::vector<ChamberFit> fits;
    for (std::size_t id = 0; id < order.size(); ++id) {
        const auto& bins = groups[order[id]];
        ChamberFit fit;
        fit.chamber_id = static_cast<int>(id);
        fit.signs = order[id];
        fit.bins_used = bins.size();
        fit.polynomial = Polynomial<double>(q);
        bool fitted = false;
        for (int deg = 0; deg <= cap; ++deg) {
            const auto basis = detail::monomials(q, deg);
            if (bins.size() <= basis.size()) break;
            const detail::WlsResult r = detail::weighted_fit(d, bins, basis);
            fit.basis = basis;
            fit.covariance = r.covariance;
            fit.chi2 = r.chi2;
            fit.dof = r.dof;
            fit.degree = deg;
            fit.polynomial = Polynomial<double>(q);
            for (std::size_t i = 0; i < basis.size(); ++i) fit.polynomial.set(basis[i], r.beta(static_cast<Eigen::Index>(i)));
            fitted = true;
            if (fit.reduced_chi2() <= threshold) {
                fit.pass = true;
                break;
            }
        }
        fit.skipped = !fitted;
        fits.push_back(std::move(fit));
    }
    return fits;
}

struct Verdict {
    bool polynomial = false;
    nlohmann::json report;
};

inline nlohmann::json to_json(const ChamberFit& f)
{
    nlohmann::json coeffs = nlohmann::json::array();
    for (const auto& e : f.basis) {
        coeffs.push_back({{"degree", e}, {"value", f.polynomial.coefficient(e)}, {"sigma", f.coefficient_sigma(e)}});
    }
    return {{"chamber", f.chamber_id}, {"signs", f.signs},     {"degree", f.degree}, {"coefficients", coeffs},
            {"chi2", f.chi2},         {"dof", f.dof},         {"bins", f.bins_used}, {"pass", f.pass},
            {"skipped", f.skipped}};
}

inline nlohmann::json to_json(const WallSet& walls)
{
    nlohmann::json out = nlohmann::json::array();
    for (const auto& w : walls.walls) {
        out.push_back({{"normal", std::vector<double>(w.normal.data(), w.normal.data() + w.normal.size())},
                       {"offset", w.offset}});
    }
    return out;
}

/// True iff every fitted chamber passes; skipped chambers are reported but do not count.
inline Verdict polynomiality_verdict(const std::vector<ChamberFit>& fits, const WallSet& walls = {})
{
    if (fits.empty()) throw ConfigError("polynomiality verdict needs at least one chamber fit");
    Verdict v;
    v.polynomial = false;
    nlohmann::json chambers = nlohmann::json::array();
    bool all = true;
    bool any = false;
    for (const auto& f : fits) {
        chambers.push_back(to_json(f));
        if (f.skipped) continue;
        any = true;
        all = all && f.pass;
    }
    v.polynomial = any && all;
    v.report = {{"walls", to_json(walls)}, {"chambers", chambers}, {"chi2_threshold", kChiSquareThreshold}, {"verdict", v.polynomial}};
    return v;
}

/**
 * Re-expresses a histogram in the chart t' = A t + b. Only signed
 * permutation matrices map grid cells onto grid cells, so other linear parts
 * are rejected.
 */
inline BinnedDensity transport(const BinnedDensity& d, const AffineTransition& tr)
{
    const int q = d.grid.dim();
    if (static_cast<int>(tr.A.size()) != q) throw DomainError("transition dimension differs from the grid");
    std::vector<int> source(static_cast<std::size_t>(q), -1), sign(static_cast<std::size_t>(q), 0);
    for (int i = 0; i < q; ++i) {
        for (int j = 0; j < q; ++j) {
            const Rational& a = tr.A[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            if (a == 0) continue;
            if ((a != 1 && a != -1) || source[static_cast<std::size_t>(i)] != -1) {
                throw DomainError("transport needs a signed permutation as linear part");
            }
            source[static_cast<std::size_t>(i)] = j;
            sign[static_cast<std::size_t>(i)] = a > 0 ? 1 : -1;
        }
        if (source[static_cast<std::size_t>(i)] < 0) throw DomainError("transport needs an invertible linear part");
    }
    Vector lo(q), hi(q);
    std::vector<int> bins(static_cast<std::size_t>(q));
    for (int i = 0; i < q; ++i) {
        const int j = source[static_cast<std::size_t>(i)];
        const double shift = tr.b[static_cast<std::size_t>(i)].convert_to<double>();
        const double a = d.grid.box().lo(j) * sign[static_cast<std::size_t>(i)] + shift;
        const double b = d.grid.box().hi(j) * sign[static_cast<std::size_t>(i)] + shift;
        lo(i) = std::min(a, b);
        hi(i) = std::max(a, b);
        bins[static_cast<std::size_t>(i)] = d.grid.bins()[static_cast<std::size_t>(j)];
    }
    BinnedDensity out;
    out.grid = Grid(Box(lo, hi), bins);
    out.samples = d.samples;
    out.seed = d.seed;
    out.mass.assign(d.mass.size(), 0.0);
    out.variance.assign(d.variance.size(), 0.0);
    out.boundary_flags.assign(d.boundary_flags.size(), false);
    for (std::size_t k = 0; k < d.grid.size(); ++k) {
        const auto idx = d.grid.unravel(k);
        std::vector<int> nidx(static_cast<std::size_t>(q));
        for (int i = 0; i < q; ++i) {
            const int j = source[static_cast<std::size_t>(i)];
            const int n = bins[static_cast<std::size_t>(i)];
            nidx[static_cast<std::size_t>(i)] = sign[static_cast<std::size_t>(i)] > 0 ? idx[static_cast<std::size_t>(j)]
                                                                                    : n - 1 - idx[static_cast<std::size_t>(j)];
        }
        const std::size_t nk = out.grid.ravel(nidx);
        out.mass[nk] = d.mass[k];
        out.variance[nk] = d.variance[k];
        out.boundary_flags[nk] = d.boundary_flags[k];
    }
    return out;
}

/// Walls carried along by t' = A t + b.
inline WallSet transport(const WallSet& walls, const AffineTransition& tr)
{
    const int q = static_cast<int>(tr.A.size());
    Matrix A(q, q);
    Vector b(q);
    for (int i = 0; i < q; ++i) {
        b(i) = tr.b[static_cast<std::size_t>(i)].convert_to<double>();
        for (int j = 0; j < q; ++j) A(i, j) = tr.A[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].convert_to<double>();
    }
    const Matrix Ainv = A.inverse();
    WallSet out;
    for (const auto& w : walls.walls) {
        // n.t = c  <=>  (A^{-T} n).t' = c + (A^{-T} n).b
        const Vector normal = Ainv.transpose() * w.normal;
        const Vector a = A * w.validity.lo + b, c = A * w.validity.hi + b;
        out.walls.push_back(Wall{normal, w.offset + normal.dot(b), Box(a.cwiseMin(c), a.cwiseMax(c)), w.columns});
    }
    return out;
}

}  // namespace dhlab::polyfit
