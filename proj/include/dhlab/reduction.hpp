#pragma once

#include <cmath>
#include <cstdio>
#include <memory>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dhlab/box.hpp"
#include "dhlab/errors.hpp"
#include "dhlab/grid.hpp"
#include "dhlab/identity.hpp"
#include "dhlab/lattice.hpp"
#include "dhlab/model.hpp"
#include "dhlab/parallel.hpp"
#include "dhlab/polytope.hpp"
#include "dhlab/sampling.hpp"
#include "dhlab/smith.hpp"
#include "dhlab/walls.hpp"

namespace dhlab::reduction {

using model::Matrix;
using model::Vector;

struct ExceptionalWall {
    Wall wall;
    int iota = 1;  // components of the isotropy of a generic point of the wall preimage
};

struct IotaProfile {
    int generic_value = 1;
    std::vector<ExceptionalWall> exceptional_walls;
};

enum class Method { exact, slab };

inline const char* to_string(Method m) { return m == Method::exact ? "exact" : "slab"; }

struct ReducedVolumeEstimate {
    Vector t;
    double value = 0.0;
    Method method = Method::exact;
    double sigma = 0.0;
    bool empty_fiber = false;
};

/**
 * Generic number of isotropy components, with the walls where point
 * stabilizers grow. On the image of the points whose nonzero coordinates are
 * the columns S, the stabilizer is Hom(Z^q / span(W_S), U(1)); its component
 * count is the torsion order of the Smith form of W_S.
 */
inline IotaProfile generic_iota(const model::HamiltonianModel& m)
{
    IotaProfile p;
    if (auto* s = std::get_if<model::SymmetryQuotient>(&m.kind)) p.generic_value = s->group_order;
    const WallSet walls = model_walls(m);
    const auto* t = model::torus_part(m);
    for (const auto& w : walls.walls) {
        ExceptionalWall ew{w, p.generic_value};
        if (t && !w.columns.empty()) {
            IntMatrix Ws(t->q, static_cast<Eigen::Index>(w.columns.size()));
            for (std::size_t k = 0; k < w.columns.size(); ++k) Ws.col(static_cast<Eigen::Index>(k)) = t->weights.col(w.columns[k]);
            ew.iota *= static_cast<int>(smith_normal_form(Ws).torsion_order());
        }
        p.exceptional_walls.push_back(std::move(ew));
    }
    return p;
}

/// Lattice data of a model: intrinsic basis plus generic iota.
inline lattice::IntegralAffineData model_lattice(const model::HamiltonianModel& m)
{
    return {lattice::intrinsic_lattice_basis(m), generic_iota(m).generic_value};
}

inline bool on_wall(const IotaProfile& p, const Vector& b, double tol = 1e-12)
{
    for (const auto& ew : p.exceptional_walls) {
        if (std::abs(ew.wall.signed_distance(b)) <= tol && (b.array() >= ew.wall.validity.lo.array() - tol).all() &&
            (b.array() <= ew.wall.validity.hi.array() + tol).all()) {
            return true;
        }
    }
    return false;
}

struct OrbitVolume {
    double value = 1.0;
    bool on_wall = false;
};

/// Symplectic volume of the leaf orbit through mu^{-1}(b): a point for torus models, the surface otherwise.
inline OrbitVolume orbit_volume(const model::HamiltonianModel& m, const Vector& b)
{
    if (b.size() != model::rank(m)) throw DomainError("orbit_volume: point has wrong dimension");
    OrbitVolume o;
    if (auto* p = std::get_if<model::SurfaceProduct>(&m.kind)) o.value = p->surface.area;
    o.on_wall = on_wall(generic_iota(m), b);
    return o;
}

namespace detail {

/**
 * (2 pi)^n times the volume of the fiber polytope in Smith-adapted
 * coordinates: with P W Q = D, u = Q (v_1..v_q, v') and v_i = (P (t - offset))_i / d_i,
 * the fiber is { v' : Q (v, v') >= 0 }.
 */
inline ReducedVolumeEstimate exact_fiber_volume(const model::TorusWeightModel& t, const Vector& b)
{
    const SmithForm snf = smith_normal_form(t.weights);
    if (snf.rank() != t.q) throw DegeneracyError("weight matrix does not have full rank");
    const Matrix P = snf.P.cast<double>();
    const Matrix Q = snf.Q.cast<double>();
    Vector v = P * (b - t.offset);
    for (int i = 0; i < t.q; ++i) v(i) /= static_cast<double>(snf.D(i, i));

    const int free_dims = t.n - t.q;
    HPolytope fiber;
    fiber.A = -Q.rightCols(free_dims);
    fiber.b = Q.leftCols(t.q) * v;

    ReducedVolumeEstimate est;
    est.t = b;
    est.method = Method::exact;
    const double vol = polytope_volume(fiber);
    est.empty_fiber = vol <= 0.0;
    est.value = std::pow(model::kTwoPi, t.n) * vol;
    return est;
}

/**
 * Fiber integrand rho_Haar(B1) |omega^top|(B2) |omega_F^top|(d mu B3) divided
 * by the Leray density |omega^top|(frame) / |det(d mu B4)| at x.
 */
inline double slab_ratio(const model::HamiltonianModel& m, const Vector& x, const lattice::IntegralAffineData& lat)
{
    const identity::FrameDecomposition f = identity::build_frames(m, x, lat);
    const Matrix omega = model::evaluate_omega(m, x);
    const Matrix F = f.full();
    const double haar = std::abs(lat.L.determinant() / lattice::intrinsic_lattice_basis(m).determinant());
    const double reduced = model::abs_pfaffian(f.B2.transpose() * omega * f.B2);
    const double leaf = model::abs_pfaffian(model::leaf_form_pullback(m, x, f.B3));
    const double transverse = std::abs((model::moment_jacobian(m, x) * f.B4).determinant());
    return haar * reduced * leaf * transverse / model::abs_pfaffian(F.transpose() * omega * F);
}

}  // namespace detail

/**
 * Reduced volume at t with isotropy normalised to Haar mass one per orbit
 * and divided by iota.
 *
 * exact: weight models only, from the fiber polytope.
 * slab:  Monte Carlo over mu^{-1} of the slab [t - eps/2, t + eps/2]^q of the
 *        fiber integrand divided by the Leray density, rescaled by eps^q.
 */
inline ReducedVolumeEstimate reduced_volume(const model::HamiltonianModel& m, const Vector& t, Method mode, double eps = 0.0,
                                            std::uint64_t samples = 0, std::uint64_t seed = 0)
{
    const int q = model::rank(m);
    if (t.size() != q) throw DomainError("reduced_volume: point has wrong dimension");
    const IotaProfile iota = generic_iota(m);
    const double orbit = orbit_volume(m, t).value;

    if (mode == Method::exact) {
        const auto* tp = model::torus_part(m);
        if (!tp) throw DomainError("exact reduced volume needs a weight model; use slab mode");
        ReducedVolumeEstimate est = detail::exact_fiber_volume(*tp, t);
        est.value /= iota.generic_value;
        return est;
    }

    if (!(eps > 0.0)) throw ConfigError("slab mode needs eps > 0");
    if (samples < 1) throw ConfigError("slab mode needs a positive sample count");
    const Box slab(t.array() - eps / 2, t.array() + eps / 2);
    for (const auto& ew : iota.exceptional_walls) {
        if (wall_touches(ew.wall, slab)) throw WallCrossingError("slab around t meets a wall; reduce eps");
    }

    ReducedVolumeEstimate est;
    est.t = t;
    est.method = Method::slab;
    const lattice::IntegralAffineData lat = model_lattice(m);
    std::unique_ptr<model::WindowSampler> sampler;
    try {
        sampler = std::make_unique<model::WindowSampler>(m, slab);
    } catch (const EmptyRegionError&) {
        est.empty_fiber = true;
        return est;
    }

    double sum = 0.0, sum_sq = 0.0;
    std::uint64_t accepted = 0;
    sampler->run(seed, samples, [&](const Vector& x, const Vector&, double w) {
        const double r = detail::slab_ratio(m, x, lat);
        sum += w * r;
        sum_sq += w * w * r * r;
        ++accepted;
    });
    const double scale = static_cast<double>(iota.generic_value) * orbit * std::pow(eps, q);
    est.value = sum / scale;
    const double var = sum_sq - sum * sum / static_cast<double>(samples);
    est.sigma = std::sqrt(std::max(var, 0.0)) / scale;
    est.empty_fiber = accepted == 0;
    return est;
}

/// Per-bin slab estimates of the reduced volume, averaged over each bin.
struct BinnedReducedVolume {
    std::vector<double> value;
    std::vector<double> sigma;
    std::vector<bool> flagged;  // bin meets a wall or its fiber is empty
};

/**
 * Slab estimator with every grid cell as its own slab, from a single
 * sampling pass over mu^{-1}(grid box). Substream partials are merged in
 * order, so the result does not depend on `threads`.
 */
inline BinnedReducedVolume slab_volumes_on_grid(const model::HamiltonianModel& m, const Grid& grid, std::uint64_t samples,
                                                std::uint64_t seed, unsigned threads = default_threads())
{
    if (grid.dim() != model::rank(m)) throw DomainError("grid dimension differs from the model rank");
    if (samples < 1) throw ConfigError("slab estimation needs a positive sample count");
    const IotaProfile iota = generic_iota(m);
    const lattice::IntegralAffineData lat = model_lattice(m);
    const std::size_t bins = grid.size();

    BinnedReducedVolume out;
    out.value.assign(bins, 0.0);
    out.sigma.assign(bins, 0.0);
    out.flagged.assign(bins, false);
    for (std::size_t k = 0; k < bins; ++k) {
        for (const auto& ew : iota.exceptional_walls) out.flagged[k] = out.flagged[k] || wall_touches(ew.wall, grid.cell(k));
    }

    const model::WindowSampler sampler(m, grid.box());
    const auto streams = static_cast<std::size_t>(model::WindowSampler::kSubstreams);
    std::vector<std::vector<double>> sum(streams), sum_sq(streams);
    parallel_for(streams, threads, [&](std::size_t s) {
        sum[s].assign(bins, 0.0);
        sum_sq[s].assign(bins, 0.0);
        sampler.run_substream(seed, s, samples, [&](const Vector& x, const Vector& mu, double w) {
            const auto k = grid.locate(mu);
            if (!k || out.flagged[*k]) return;
            const double v = w * detail::slab_ratio(m, x, lat);
            sum[s][*k] += v;
            sum_sq[s][*k] += v * v;
        });
    });

    const double n = static_cast<double>(samples);
    for (std::size_t k = 0; k < bins; ++k) {
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t s = 0; s < streams; ++s) {
            s1 += sum[s][k];
            s2 += sum_sq[s][k];
        }
        const Vector c = grid.center(k);
        const double scale = iota.generic_value * orbit_volume(m, c).value * grid.cell_volume();
        out.value[k] = s1 / scale;
        out.sigma[k] = std::sqrt(std::max(0.0, s2 - s1 * s1 / n)) / scale;
        if (!out.flagged[k] && s1 == 0.0) out.flagged[k] = true;
    }
    return out;
}

struct VolumeRow {
    Vector t;
    double vol = 0.0;
    double vol_red = 0.0;
    int iota = 1;
    Method method = Method::exact;
    double sigma = 0.0;
    bool on_wall = false;
    bool empty_fiber = false;
};

struct SlabOptions {
    std::uint64_t samples = 1000000;
    std::uint64_t seed = 1;
};

/**
 * vol(t) = iota * orbit volume and vol_red(t) = iota * reduced volume on the
 * grid. Weight models use the exact fiber volume at cell centers; chart
 * models use cell averages from the slab estimator.
 */
inline std::vector<VolumeRow> vol_functions_on_grid(const model::HamiltonianModel& m, const Grid& grid,
                                                    const SlabOptions& slab = {})
{
    const IotaProfile iota = generic_iota(m);
    const auto* t = model::torus_part(m);
    const double orbit = orbit_volume(m, grid.center(0)).value;
    BinnedReducedVolume binned;
    if (!t) binned = slab_volumes_on_grid(m, grid, slab.samples, slab.seed);

    std::vector<VolumeRow> rows;
    rows.reserve(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        VolumeRow row;
        row.t = grid.center(k);
        row.iota = iota.generic_value;
        row.vol = iota.generic_value * orbit;
        row.on_wall = on_wall(iota, row.t);
        if (t) {
            const ReducedVolumeEstimate r = detail::exact_fiber_volume(*t, row.t);
            row.method = Method::exact;
            row.vol_red = iota.generic_value * (r.value / iota.generic_value);
            row.empty_fiber = r.empty_fiber;
        } else {
            row.method = Method::slab;
            row.vol_red = iota.generic_value * binned.value[k];
            row.sigma = iota.generic_value * binned.sigma[k];
            row.on_wall = row.on_wall || binned.flagged[k];
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string volume_table_csv(const std::vector<VolumeRow>& rows)
{
    std::string out;
    const Eigen::Index q = rows.empty() ? 0 : rows.front().t.size();
    for (Eigen::Index i = 0; i < q; ++i) out += "t_" + std::to_string(i + 1) + ",";
    out += "vol,vol_red,iota,method,sigma,flags\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const auto& r : rows) {
        for (Eigen::Index i = 0; i < q; ++i) out += num(r.t(i)) + ",";
        std::string flags;
        if (r.on_wall) flags += "wall";
        if (r.empty_fiber) flags += flags.empty() ? "empty" : "|empty";
        out += num(r.vol) + "," + num(r.vol_red) + "," + std::to_string(r.iota) + "," + to_string(r.method) + "," +
               num(r.sigma) + "," + flags + "\n";
    }
    return out;
}

}  // namespace dhlab::reduction
