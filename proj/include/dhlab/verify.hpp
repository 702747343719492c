#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dhlab/errors.hpp"
#include "dhlab/grid.hpp"
#include "dhlab/lattice.hpp"
#include "dhlab/model.hpp"
#include "dhlab/parallel.hpp"
#include "dhlab/pushforward.hpp"
#include "dhlab/reduction.hpp"

namespace dhlab::verify {

using model::Vector;

struct BinRow {
    Vector t;
    double dh_density = 0.0;
    double dh_sigma = 0.0;
    double vol = 0.0;
    double vol_red = 0.0;
    double vol_red_sigma = 0.0;
    double affine_density = 0.0;
    double product = 0.0;
    double product_sigma = 0.0;
    double z = 0.0;
    bool flagged = false;
};

struct VerificationReport {
    std::string model_id;
    Grid grid;
    std::vector<BinRow> rows;
    double max_abs_z = 0.0;
    double fraction_within = 0.0;
    std::size_t unflagged = 0;
    bool verdict = false;
};

inline constexpr double kZLimit = 3.0;
inline constexpr double kRequiredFraction = 0.95;

/// Per-bin averages of vol_red together with their standard errors and wall flags.
struct ProductSide {
    std::vector<double> vol_red;
    std::vector<double> sigma;
    std::vector<bool> flagged;
};

namespace detail {

// 4-point Gauss-Legendre on [-1, 1]
inline constexpr std::array<double, 4> kNodes{-0.86113631159405257522, -0.33998104358485626480, 0.33998104358485626480,
                                              0.86113631159405257522};
inline constexpr std::array<double, 4> kWeights{0.34785484513745385737, 0.65214515486254614263, 0.65214515486254614263,
                                                0.34785484513745385737};

/// Bin averages of the exact reduced volume by tensor Gauss-Legendre quadrature.
inline ProductSide exact_product_side(const model::TorusWeightModel& t, const Grid& grid, int iota)
{
    const int q = grid.dim();
    ProductSide s;
    s.vol_red.assign(grid.size(), 0.0);
    s.sigma.assign(grid.size(), 0.0);
    s.flagged.assign(grid.size(), false);
    std::size_t nodes = 1;
    for (int a = 0; a < q; ++a) nodes *= kNodes.size();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const Box cell = grid.cell(k);
        double avg = 0.0;
        Vector p(q);
        for (std::size_t node = 0; node < nodes; ++node) {
            std::size_t rest = node;
            double w = 1.0;
            for (int a = 0; a < q; ++a) {
                const std::size_t i = rest % kNodes.size();
                rest /= kNodes.size();
                p(a) = 0.5 * (cell.lo(a) + cell.hi(a)) + 0.5 * (cell.hi(a) - cell.lo(a)) * kNodes[i];
                w *= 0.5 * kWeights[i];
            }
            avg += w * reduction::detail::exact_fiber_volume(t, p).value;
        }
        // vol_red carries one factor of iota against the 1/iota inside the reduced volume
        s.vol_red[k] = static_cast<double>(iota) * (avg / iota);
    }
    return s;
}

/// Bin averages of vol_red from the single-pass slab estimator.
inline ProductSide slab_product_side(const model::HamiltonianModel& m, const Grid& grid, std::uint64_t samples,
                                     std::uint64_t seed, int iota, unsigned threads)
{
    const auto binned = reduction::slab_volumes_on_grid(m, grid, samples, seed, threads);
    ProductSide s;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        s.vol_red.push_back(iota * binned.value[k]);
        s.sigma.push_back(iota * binned.sigma[k]);
        s.flagged.push_back(binned.flagged[k]);
    }
    return s;
}

inline VerificationReport assemble(const model::HamiltonianModel& m, const pushforward::BinnedDensity& dh,
                                   const ProductSide& side, double vol, double affine)
{
    VerificationReport rep;
    rep.model_id = m.id;
    rep.grid = dh.grid;
    std::size_t within = 0;
    for (std::size_t k = 0; k < dh.grid.size(); ++k) {
        BinRow row;
        row.t = dh.grid.center(k);
        row.dh_density = dh.density(k);
        row.dh_sigma = dh.sigma(k);
        row.vol = vol;
        row.vol_red = side.vol_red[k];
        row.vol_red_sigma = side.sigma[k];
        row.affine_density = affine;
        row.product = vol * side.vol_red[k] * affine;
        row.product_sigma = vol * side.sigma[k] * affine;
        const double sigma = std::hypot(row.dh_sigma, row.product_sigma);
        const double diff = row.dh_density - row.product;
        row.z = sigma > 0.0 ? diff / sigma : (diff == 0.0 ? 0.0 : INFINITY);
        row.flagged = dh.boundary_flags[k] || side.flagged[k];
        if (!row.flagged) {
            ++rep.unflagged;
            rep.max_abs_z = std::max(rep.max_abs_z, std::abs(row.z));
            if (std::abs(row.z) < kZLimit) ++within;
        }
        rep.rows.push_back(std::move(row));
    }
    rep.fraction_within = rep.unflagged ? static_cast<double>(within) / static_cast<double>(rep.unflagged) : 0.0;
    rep.verdict = rep.unflagged > 0 && rep.fraction_within >= kRequiredFraction;
    return rep;
}

}  // namespace detail

/// Seed of the slab estimator, decorrelated from the histogram seed.
inline std::uint64_t product_seed(std::uint64_t seed) { return seed ^ 0x9e3779b97f4a7c15ULL; }

/**
 * Product side vol * vol_red * affine density per bin, computed without the
 * pushforward module: exact fiber volumes for weight models, slab estimates
 * for charts. `slab_samples` applies to charts only.
 */
inline ProductSide product_side(const model::HamiltonianModel& m, const Grid& grid, std::uint64_t slab_samples,
                                std::uint64_t seed, unsigned threads = default_threads())
{
    const int iota = reduction::generic_iota(m).generic_value;
    if (const auto* t = model::torus_part(m)) return detail::exact_product_side(*t, grid, iota);
    return detail::slab_product_side(m, grid, slab_samples, seed, iota, threads);
}

/// Both sides of the main identity on `grid`, with z-scores from the Monte Carlo errors.
inline VerificationReport verify_main_theorem(const model::HamiltonianModel& m, const Grid& grid, std::uint64_t samples,
                                              std::uint64_t seed, unsigned threads = default_threads())
{
    const auto dh = pushforward::dh_monte_carlo(m, grid, samples, seed, threads);
    const ProductSide side = product_side(m, grid, samples, product_seed(seed), threads);
    const reduction::IotaProfile iota = reduction::generic_iota(m);
    const double vol = iota.generic_value * reduction::orbit_volume(m, grid.center(0)).value;
    const double affine = lattice::affine_density(reduction::model_lattice(m));
    return detail::assemble(m, dh, side, vol, affine);
}

/**
 * Free-case form: mu_DH = vol_1 * vol_2 * mu_aff with vol_1 the leaf orbit
 * volume and vol_2 the reduced volume. Requires an effective, locally free
 * action with connected generic isotropy.
 */
inline VerificationReport verify_free_case(const model::HamiltonianModel& m, const Grid& grid, std::uint64_t samples,
                                           std::uint64_t seed, unsigned threads = default_threads())
{
    if (std::holds_alternative<model::SymmetryQuotient>(m.kind) || std::holds_alternative<model::ChartModel>(m.kind)) {
        throw DomainError("free-case verification needs a weight model or a surface product");
    }
    const model::ValidationReport v = model::validate_model(m);
    const reduction::IotaProfile iota = reduction::generic_iota(m);
    if (!v.effective || !v.locally_free || iota.generic_value != 1) {
        throw DomainError("free-case verification needs an effective, free action (generic isotropy connected)");
    }
    const auto dh = pushforward::dh_monte_carlo(m, grid, samples, seed, threads);
    const ProductSide side = product_side(m, grid, samples, product_seed(seed), threads);
    const double vol1 = reduction::orbit_volume(m, grid.center(0)).value;
    const double affine = lattice::affine_density(lattice::standard_lattice(model::rank(m)));
    return detail::assemble(m, dh, side, vol1, affine);
}

// ---- output ----------------------------------------------------------------

inline std::string to_csv(const VerificationReport& r)
{
    using pushforward::format_double;
    std::string out;
    const int q = r.grid.dim();
    for (int i = 0; i < q; ++i) out += "t_" + std::to_string(i + 1) + ",";
    out += "dh_density,dh_sigma,vol,vol_red,affine_density,product,z_score,flagged\n";
    for (const auto& row : r.rows) {
        for (int i = 0; i < q; ++i) out += format_double(row.t(i)) + ",";
        out += format_double(row.dh_density) + "," + format_double(row.dh_sigma) + "," + format_double(row.vol) + "," +
               format_double(row.vol_red) + "," + format_double(row.affine_density) + "," + format_double(row.product) +
               "," + format_double(row.z) + "," + (row.flagged ? "1" : "0") + "\n";
    }
    return out;
}

inline nlohmann::json summary_json(const VerificationReport& r)
{
    const Box& b = r.grid.box();
    return {{"model", r.model_id},
            {"grid", {{"lo", std::vector<double>(b.lo.data(), b.lo.data() + b.lo.size())},
                      {"hi", std::vector<double>(b.hi.data(), b.hi.data() + b.hi.size())},
                      {"bins", r.grid.bins()}}},
            {"bins_unflagged", r.unflagged},
            {"max_abs_z", r.max_abs_z},
            {"fraction_within_3sigma", r.fraction_within},
            {"verdict", r.verdict}};
}

}  // namespace dhlab::verify
