#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "dhlab/box.hpp"
#include "dhlab/model.hpp"
#include "dhlab/polytope.hpp"

namespace dhlab {

/// Piece of an affine hyperplane { t : normal . t = offset } restricted to a validity box.
struct Wall {
    Eigen::VectorXd normal;
    double offset = 0.0;
    Box validity;
    std::vector<int> columns;  // generating weight columns; empty for empirical walls

    double signed_distance(const Eigen::VectorXd& t) const { return normal.dot(t) - offset; }
};

struct WallSet {
    std::vector<Wall> walls;

    bool empty() const { return walls.empty(); }
    std::size_t size() const { return walls.size(); }
};

/// True when the wall piece meets `box` grown by `margin` on every side.
inline bool wall_touches(const Wall& w, const Box& box, double margin = 0.0)
{
    Box grown(box.lo.array() - margin, box.hi.array() + margin);
    const Eigen::Index d = grown.dim();
    Box clip(grown.lo.cwiseMax(w.validity.lo), grown.hi.cwiseMin(w.validity.hi));
    if ((clip.lo.array() > clip.hi.array()).any()) return false;
    // the hyperplane meets the clipped box iff the corners do not all lie strictly on one side
    double lo = 0.0, hi = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
        const double a = w.normal(i) * clip.lo(i), b = w.normal(i) * clip.hi(i);
        lo += std::min(a, b);
        hi += std::max(a, b);
    }
    const double tol = 1e-12 * std::max(1.0, std::abs(w.offset));
    return lo <= w.offset + tol && hi >= w.offset - tol;
}

/**
 * Chamber walls of a linear torus model: images under mu of the coordinate
 * cones spanned by q-1 independent weight columns, clipped to the window.
 * Coincident pieces are merged.
 */
inline WallSet cone_walls(const model::TorusWeightModel& t)
{
    const int q = t.q;
    const Eigen::MatrixXd W = t.weights.cast<double>();
    WallSet out;
    detail::for_each_subset(t.n, q - 1, [&](const std::vector<Eigen::Index>& cols) {
        Eigen::MatrixXd S(q, q - 1);
        for (int k = 0; k < q - 1; ++k) S.col(k) = W.col(cols[static_cast<std::size_t>(k)]);
        Eigen::VectorXd normal;
        if (q == 1) {
            normal = Eigen::VectorXd::Ones(1);
        } else {
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(S, Eigen::ComputeFullU);
            if (svd.rank() < q - 1) return;
            normal = svd.matrixU().col(q - 1);
        }
        // canonical orientation: first nonzero component positive
        for (Eigen::Index i = 0; i < normal.size(); ++i) {
            if (std::abs(normal(i)) > 1e-12) {
                if (normal(i) < 0) normal = -normal;
                break;
            }
        }
        for (Eigen::Index i = 0; i < normal.size(); ++i) {
            if (std::abs(normal(i)) < 1e-15) normal(i) = 0.0;
        }

        // cone points offset + S c, c >= 0, inside the window
        HPolytope P;
        P.A = Eigen::MatrixXd::Zero(0, q - 1);
        for (int k = 0; k < q - 1; ++k) P.add(-Eigen::VectorXd::Unit(q - 1, k), 0.0);
        for (int i = 0; i < q; ++i) {
            P.add(S.row(i).transpose(), t.window.hi(i) - t.offset(i));
            P.add(-S.row(i).transpose(), t.offset(i) - t.window.lo(i));
        }
        const VertexSet vs = enumerate_vertices(P);
        if (vs.empty()) return;
        Eigen::VectorXd lo = Eigen::VectorXd::Constant(q, INFINITY), hi = Eigen::VectorXd::Constant(q, -INFINITY);
        for (const auto& c : vs.points) {
            const Eigen::VectorXd p = t.offset + S * c;
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }

        Wall w{normal, normal.dot(t.offset), Box(lo, hi), {}};
        for (auto c : cols) w.columns.push_back(static_cast<int>(c));

        for (auto& existing : out.walls) {
            if ((existing.normal - w.normal).norm() < 1e-9 && std::abs(existing.offset - w.offset) < 1e-9) {
                existing.validity = Box(existing.validity.lo.cwiseMin(w.validity.lo), existing.validity.hi.cwiseMax(w.validity.hi));
                return;
            }
        }
        out.walls.push_back(std::move(w));
    });
    return out;
}

/// Walls of any model: cone walls for weight models, listed critical values for charts.
inline WallSet model_walls(const model::HamiltonianModel& m)
{
    if (auto* t = model::torus_part(m)) return cone_walls(*t);
    WallSet out;
    for (double v : std::get<model::ChartModel>(m.kind).wall_values) {
        out.walls.push_back(Wall{Eigen::VectorXd::Ones(1), v, Box::interval(v, v), {}});
    }
    return out;
}

}  // namespace dhlab
