#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "dhlab/errors.hpp"

namespace dhlab {

/// Convex polyhedron { x : A x <= b } in R^d.
struct HPolytope {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;

    Eigen::Index dim() const { return A.cols(); }
    Eigen::Index constraints() const { return A.rows(); }

    void add(const Eigen::VectorXd& row, double rhs)
    {
        A.conservativeResize(A.rows() + 1, row.size());
        A.row(A.rows() - 1) = row.transpose();
        b.conservativeResize(b.size() + 1);
        b(b.size() - 1) = rhs;
    }
};

/// Vertices with the set of constraints active at each one.
struct VertexSet {
    std::vector<Eigen::VectorXd> points;
    std::vector<std::set<Eigen::Index>> active;
    bool empty() const { return points.empty(); }
};

namespace detail {

inline double polytope_tolerance(const HPolytope& P)
{
    const double scale = P.b.size() ? std::max(1.0, P.b.cwiseAbs().maxCoeff()) : 1.0;
    return 1e-9 * scale;
}

// Calls f on every k-subset of {0..n-1} in lexicographic order.
template <typename F>
void for_each_subset(Eigen::Index n, Eigen::Index k, F&& f)
{
    if (k > n) return;
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (;;) {
        f(idx);
        Eigen::Index i = k - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
        if (i < 0) return;
        ++idx[static_cast<std::size_t>(i)];
        for (Eigen::Index j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
}

// Affine dimension of a point set and an orthonormal basis of its direction space.
inline Eigen::MatrixXd affine_basis(const std::vector<Eigen::VectorXd>& pts, double tol)
{
    if (pts.size() < 2) return Eigen::MatrixXd(pts.empty() ? 0 : pts.front().size(), 0);
    Eigen::MatrixXd diffs(pts.front().size(), static_cast<Eigen::Index>(pts.size() - 1));
    for (std::size_t i = 1; i < pts.size(); ++i) diffs.col(static_cast<Eigen::Index>(i - 1)) = pts[i] - pts[0];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(diffs, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    Eigen::Index r = 0;
    const double cut = tol * std::max(1.0, sv.size() ? sv(0) : 0.0);
    while (r < sv.size() && sv(r) > cut) ++r;
    return svd.matrixU().leftCols(r);
}

inline double face_volume(const std::vector<Eigen::VectorXd>& verts,
                          const std::vector<std::set<Eigen::Index>>& active,
                          const std::vector<std::size_t>& face, Eigen::Index k, double tol)
{
    if (k == 0) return 1.0;
    if (k == 1) {
        double len = 0.0;
        for (auto i : face) {
            for (auto j : face) len = std::max(len, (verts[i] - verts[j]).norm());
        }
        return len;
    }
    // cone from an apex over every facet not containing it
    const std::size_t apex = face.front();
    std::set<Eigen::Index> candidates;
    for (auto v : face) candidates.insert(active[v].begin(), active[v].end());

    std::set<std::vector<std::size_t>> seen;
    double total = 0.0;
    for (auto c : candidates) {
        std::vector<std::size_t> sub;
        for (auto v : face) {
            if (active[v].count(c)) sub.push_back(v);
        }
        if (sub.size() == face.size() || sub.size() < static_cast<std::size_t>(k)) continue;
        if (std::find(sub.begin(), sub.end(), apex) != sub.end()) continue;
        if (!seen.insert(sub).second) continue;

        std::vector<Eigen::VectorXd> pts;
        for (auto v : sub) pts.push_back(verts[v]);
        const Eigen::MatrixXd basis = affine_basis(pts, tol);
        if (basis.cols() != k - 1) continue;

        Eigen::VectorXd rel = verts[apex] - pts.front();
        rel -= basis * (basis.transpose() * rel);
        total += rel.norm() * face_volume(verts, active, sub, k - 1, tol) / static_cast<double>(k);
    }
    return total;
}

}  // namespace detail

/// Vertex enumeration by testing every d-subset of constraints.
inline VertexSet enumerate_vertices(const HPolytope& P)
{
    const Eigen::Index d = P.dim();
    const double tol = detail::polytope_tolerance(P);
    VertexSet out;
    if (d == 0) {
        if ((P.b.array() >= -tol).all()) {
            out.points.emplace_back(Eigen::VectorXd(0));
            out.active.emplace_back();
        }
        return out;
    }
    detail::for_each_subset(P.constraints(), d, [&](const std::vector<Eigen::Index>& rows) {
        Eigen::MatrixXd M(d, d);
        Eigen::VectorXd rhs(d);
        for (Eigen::Index i = 0; i < d; ++i) {
            M.row(i) = P.A.row(rows[static_cast<std::size_t>(i)]);
            rhs(i) = P.b(rows[static_cast<std::size_t>(i)]);
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
        if (lu.rank() < d) return;
        const Eigen::VectorXd x = lu.solve(rhs);
        const Eigen::VectorXd slack = P.b - P.A * x;
        if ((slack.array() < -tol).any()) return;

        std::set<Eigen::Index> act;
        for (Eigen::Index i = 0; i < slack.size(); ++i) {
            if (std::abs(slack(i)) <= tol) act.insert(i);
        }
        for (std::size_t v = 0; v < out.points.size(); ++v) {
            if ((out.points[v] - x).lpNorm<Eigen::Infinity>() <= 10 * tol) {
                out.active[v].insert(act.begin(), act.end());
                return;
            }
        }
        out.points.push_back(x);
        out.active.push_back(std::move(act));
    });
    return out;
}

/// True when the recession cone { A x <= 0 } is trivial.
inline bool is_bounded(const HPolytope& P)
{
    const Eigen::Index d = P.dim();
    HPolytope cone{P.A, Eigen::VectorXd::Zero(P.constraints())};
    for (Eigen::Index k = 0; k < d; ++k) {
        Eigen::VectorXd e = Eigen::VectorXd::Unit(d, k);
        cone.add(e, 1.0);
        cone.add(-e, 1.0);
    }
    for (const auto& v : enumerate_vertices(cone).points) {
        if (v.lpNorm<Eigen::Infinity>() > 1e-9) return false;
    }
    return true;
}

/**
 * d-dimensional volume of a bounded H-polytope.
 *
 * Vertices are enumerated exactly (up to a relative tolerance); the volume is
 * assembled by recursive coning over the face lattice, so no Delaunay
 * triangulation is needed. Lower-dimensional polytopes have volume 0, except
 * for d = 0 where a nonempty polytope is a point of volume 1.
 */
inline double polytope_volume(const HPolytope& P)
{
    if (!is_bounded(P)) throw DomainError("polytope_volume: unbounded polyhedron");
    const VertexSet vs = enumerate_vertices(P);
    if (vs.empty()) return 0.0;
    const Eigen::Index d = P.dim();
    if (d == 0) return 1.0;
    const double tol = detail::polytope_tolerance(P);
    if (detail::affine_basis(vs.points, tol).cols() < d) return 0.0;
    std::vector<std::size_t> all(vs.points.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return detail::face_volume(vs.points, vs.active, all, d, tol);
}

/// Axis-aligned bounding box of a bounded, nonempty polytope.
inline std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> bounding_box(const HPolytope& P)
{
    const VertexSet vs = enumerate_vertices(P);
    if (vs.empty()) return std::nullopt;
    Eigen::VectorXd lo = vs.points.front(), hi = vs.points.front();
    for (const auto& v : vs.points) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    return std::make_pair(lo, hi);
}

}  // namespace dhlab
