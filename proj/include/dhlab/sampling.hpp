#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <vector>

#include "dhlab/model.hpp"
#include "dhlab/polytope.hpp"
#include "dhlab/rng.hpp"

namespace dhlab {

/// Call counters used by integration tests to audit which pipelines touch
/// Monte Carlo machinery.
namespace trace {
inline std::atomic<std::uint64_t> sampler_runs{0};
inline std::atomic<std::uint64_t> pushforward_runs{0};
}  // namespace trace

}  // namespace dhlab

namespace dhlab::model {

struct WeightedPoint {
    Vector x;
    double weight;
};

/// Action-space region { u >= 0 : lo <= W u + offset <= hi } of a torus model.
inline HPolytope action_region(const TorusWeightModel& t, const Box& win)
{
    HPolytope P;
    P.A = Matrix::Zero(0, t.n);
    for (int j = 0; j < t.n; ++j) P.add(-Vector::Unit(t.n, j), 0.0);
    const Matrix W = t.weights.cast<double>();
    for (int i = 0; i < t.q; ++i) {
        P.add(W.row(i).transpose(), win.hi(i) - t.offset(i));
        P.add(-W.row(i).transpose(), t.offset(i) - win.lo(i));
    }
    return P;
}

/**
 * Importance sampler for the Liouville measure restricted to mu^{-1}(window).
 *
 * Weight models are sampled in action-angle coordinates (u_j = |z_j|^2 / 2,
 * theta_j) where Liouville measure is du d(theta): u is drawn uniformly in the
 * bounding box of the action polytope and rejected outside it. Chart models
 * draw uniformly in a chart box and weight by the Liouville density.
 *
 * A run of `total` proposals is split into fixed substreams; each accepted
 * proposal carries weight V * rho(x) / total where V is the proposal volume,
 * so the weights sum to an unbiased estimate of the Liouville volume.
 */
class WindowSampler {
public:
    static constexpr std::uint64_t kSubstreams = 64;

    WindowSampler(const HamiltonianModel& m, const Box& win) : model_(&m), window_(win)
    {
        if (win.dim() != rank(m)) throw DomainError("sampling window has wrong dimension");
        if (win.empty()) throw EmptyRegionError("sampling window has zero volume");
        if (auto* c = std::get_if<ChartModel>(&m.kind)) {
            box_ = c->sampling_box ? c->sampling_box(win) : c->domain;
            volume_ = box_.volume();
            if (!(volume_ > 0.0)) throw EmptyRegionError("chart sampling box is empty");
            probe_chart();
            return;
        }
        const auto& t = *torus_part(m);
        const HPolytope region = action_region(t, win);
        if (!is_bounded(region)) throw DomainError("moment map is not proper over the window (unbounded preimage)");
        const auto bb = bounding_box(region);
        if (!bb || polytope_volume(region) <= 0.0) throw EmptyRegionError("mu^{-1}(window) has zero volume");
        box_ = Box(bb->first.cwiseMax(0.0), bb->second);
        volume_ = std::pow(kTwoPi, t.n) * box_.volume();
        if (auto* p = std::get_if<SurfaceProduct>(&m.kind)) volume_ *= p->surface.area;
    }

    /// Volume of the proposal region in Liouville units.
    double proposal_volume() const { return volume_; }
    const Box& window() const { return window_; }

    /// Proposals assigned to substream k out of `total`.
    static std::uint64_t substream_size(std::uint64_t total, std::uint64_t k)
    {
        return total / kSubstreams + (k < total % kSubstreams ? 1 : 0);
    }

    /**
     * Run substream k of a `total`-proposal stream, calling
     * f(const Vector& x, const Vector& mu, double weight) per accepted point.
     */
    template <typename F>
    void run_substream(std::uint64_t seed, std::uint64_t k, std::uint64_t total, F&& f) const
    {
        ++trace::sampler_runs;
        SubstreamRng rng(seed, k);
        const std::uint64_t count = substream_size(total, k);
        const double base_weight = volume_ / static_cast<double>(total);
        if (auto* c = std::get_if<ChartModel>(&model_->kind)) {
            Vector x(c->dim);
            for (std::uint64_t s = 0; s < count; ++s) {
                for (int a = 0; a < c->dim; ++a) x(a) = rng.uniform(box_.lo(a), box_.hi(a));
                if (!in_chart(*c, x)) continue;
                const Vector mu = c->moment_eval(x);
                if (!window_.contains(mu)) continue;
                f(x, mu, base_weight * abs_pfaffian(c->omega_eval(x)));
            }
            return;
        }
        const auto& t = *torus_part(*model_);
        const bool product = std::holds_alternative<SurfaceProduct>(model_->kind);
        const int offset = product ? 2 : 0;
        const Matrix W = t.weights.cast<double>();
        Vector u(t.n), theta(t.n), x(2 * t.n + offset);
        for (std::uint64_t s = 0; s < count; ++s) {
            for (int j = 0; j < t.n; ++j) u(j) = rng.uniform(box_.lo(j), box_.hi(j));
            for (int j = 0; j < t.n; ++j) theta(j) = kTwoPi * rng.uniform();
            double s1 = 0.0, s2 = 0.0;
            if (product) {
                s1 = rng.uniform();
                s2 = rng.uniform();
            }
            const Vector mu = W * u + t.offset;
            if (!window_.contains(mu)) continue;
            if (product) {
                x(0) = s1;
                x(1) = s2;
            }
            for (int j = 0; j < t.n; ++j) {
                const double r = std::sqrt(2.0 * u(j));
                x(offset + 2 * j) = r * std::cos(theta(j));
                x(offset + 2 * j + 1) = r * std::sin(theta(j));
            }
            f(x, mu, base_weight);
        }
    }

    template <typename F>
    void run(std::uint64_t seed, std::uint64_t total, F&& f) const
    {
        for (std::uint64_t k = 0; k < kSubstreams; ++k) run_substream(seed, k, total, f);
    }

private:
    static bool in_chart(const ChartModel& c, const Vector& x)
    {
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (c.periodic[static_cast<std::size_t>(i)]) continue;
            if (!(x(i) > c.domain.lo(i) && x(i) < c.domain.hi(i))) return false;
        }
        return true;
    }

    void probe_chart() const
    {
        auto* c = std::get_if<ChartModel>(&model_->kind);
        SubstreamRng rng(0x5eed, 0);
        Vector x(c->dim);
        for (int s = 0; s < 10000; ++s) {
            for (int a = 0; a < c->dim; ++a) x(a) = rng.uniform(box_.lo(a), box_.hi(a));
            if (in_chart(*c, x) && window_.contains(c->moment_eval(x))) return;
        }
        throw EmptyRegionError("no proposal landed in mu^{-1}(window) within the probe budget");
    }

    const HamiltonianModel* model_;
    Box window_;
    Box box_;
    double volume_ = 0.0;
};

/// Materialized sample stream over mu^{-1}(window); deterministic in `seed`.
inline std::vector<WeightedPoint> sample_window(const HamiltonianModel& m, std::uint64_t count, std::uint64_t seed,
                                                const std::optional<Box>& win = std::nullopt)
{
    if (count < 1) throw ConfigError("sample_window: count must be positive");
    WindowSampler sampler(m, win ? *win : window(m));
    std::vector<WeightedPoint> out;
    sampler.run(seed, count, [&](const Vector& x, const Vector&, double w) { out.push_back({x, w}); });
    return out;
}

}  // namespace dhlab::model
