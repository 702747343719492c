#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "dhlab/box.hpp"
#include "dhlab/errors.hpp"
#include "dhlab/polytope.hpp"
#include "dhlab/rng.hpp"
#include "dhlab/smith.hpp"

namespace dhlab::model {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// |Pfaffian| below this is treated as a degenerate form.
inline constexpr double kDegeneracyThreshold = 1e-12;

/**
 * Linear torus action on C^n with integer weight matrix W (q x n).
 *
 * Real coordinates are ordered (x_1, y_1, ..., x_n, y_n) with z_j = x_j + i y_j.
 * The moment map is mu(z) = W (|z_1|^2, ..., |z_n|^2) / 2 + offset and the
 * i-th generator acts by the rotation field sum_j W_ij (-y_j, x_j).
 */
struct TorusWeightModel {
    int n = 1;
    int q = 1;
    IntMatrix weights;
    Vector offset;
    Box window;
};

/**
 * Model given directly in one chart by evaluators. Periodic axes wrap; the
 * remaining axes form an open interval, so fixed points on the boundary of
 * the chart (sphere poles) are excluded.
 */
struct ChartModel {
    int dim = 2;
    int q = 1;
    Box domain;
    std::vector<bool> periodic;
    std::function<Matrix(const Vector&)> omega_eval;
    std::function<Vector(const Vector&)> moment_eval;
    std::function<Vector(const Vector&, int)> action_eval;
    int leaf_dim = 0;
    std::function<Matrix(const Vector&)> leaf_frame_eval;
    Box window;
    /// Torus weights on the periodic axes, when the action is a linear flow on them.
    std::optional<IntMatrix> period_weights;
    /// Chart box containing mu^{-1}(window); defaults to the whole domain.
    std::function<Box(const Box&)> sampling_box;
    /// Analytic Liouville volume of mu^{-1}(window), when known.
    std::function<double(const Box&)> liouville_volume;
    /// Moment values of the non-free orbits (q = 1 only).
    std::vector<double> wall_values;
};

/// Closed surface of area A, modelled on the periodic unit square.
struct SurfaceFactor {
    double area = 1.0;
};

/**
 * Surface factor times a torus model: the pair groupoid of the surface acts
 * leafwise, the torus acts transversally. Coordinates are (s_1, s_2, torus...).
 * The surface block of omega is the negative of the leaf form, as required
 * by the Hamiltonian condition for the pair groupoid.
 */
struct SurfaceProduct {
    SurfaceFactor surface;
    TorusWeightModel torus;
};

/// Torus model with an extra finite symmetry group of signed coordinate permutations.
struct SymmetryQuotient {
    TorusWeightModel base;
    int group_order = 1;
    std::vector<IntMatrix> generators;
};

struct HamiltonianModel {
    std::string id;
    std::variant<TorusWeightModel, ChartModel, SurfaceProduct, SymmetryQuotient> kind;
};

// ---- metadata -----------------------------------------------------------

inline const TorusWeightModel* torus_part(const HamiltonianModel& m)
{
    if (auto* t = std::get_if<TorusWeightModel>(&m.kind)) return t;
    if (auto* p = std::get_if<SurfaceProduct>(&m.kind)) return &p->torus;
    if (auto* s = std::get_if<SymmetryQuotient>(&m.kind)) return &s->base;
    return nullptr;
}

inline int real_dimension(const HamiltonianModel& m)
{
    if (auto* c = std::get_if<ChartModel>(&m.kind)) return c->dim;
    const int torus = 2 * torus_part(m)->n;
    return std::holds_alternative<SurfaceProduct>(m.kind) ? torus + 2 : torus;
}

/// Transverse rank q.
inline int rank(const HamiltonianModel& m)
{
    if (auto* c = std::get_if<ChartModel>(&m.kind)) return c->q;
    return torus_part(m)->q;
}

/// Dimension of the leafwise (V3) directions.
inline int leaf_dim(const HamiltonianModel& m)
{
    if (auto* c = std::get_if<ChartModel>(&m.kind)) return c->leaf_dim;
    return std::holds_alternative<SurfaceProduct>(m.kind) ? 2 : 0;
}

/// Dimension of the groupoid base M: q transverse plus leaf directions.
inline int base_dimension(const HamiltonianModel& m) { return rank(m) + leaf_dim(m); }

inline const Box& window(const HamiltonianModel& m)
{
    if (auto* c = std::get_if<ChartModel>(&m.kind)) return c->window;
    return torus_part(m)->window;
}

inline bool is_weight_based(const HamiltonianModel& m) { return torus_part(m) != nullptr; }

// ---- pointwise geometry -------------------------------------------------

namespace detail {

inline void check_dimension(const HamiltonianModel& m, const Vector& x)
{
    if (x.size() != real_dimension(m)) {
        throw DomainError("point has dimension " + std::to_string(x.size()) + ", model expects " +
                          std::to_string(real_dimension(m)));
    }
    if (!x.allFinite()) throw DomainError("point has non-finite coordinates");
}

inline void check_chart_domain(const ChartModel& c, const Vector& x)
{
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (c.periodic[static_cast<std::size_t>(i)]) continue;
        if (!(x(i) > c.domain.lo(i) && x(i) < c.domain.hi(i))) {
            throw DomainError("point outside chart domain on axis " + std::to_string(i));
        }
    }
}

/// Standard form with blocks [[0, -s], [s, 0]].
inline Matrix standard_blocks(int pairs, double s = 1.0)
{
    Matrix w = Matrix::Zero(2 * pairs, 2 * pairs);
    for (int j = 0; j < pairs; ++j) {
        w(2 * j, 2 * j + 1) = -s;
        w(2 * j + 1, 2 * j) = s;
    }
    return w;
}

inline Vector squared_moduli(const Vector& x)
{
    Vector r(x.size() / 2);
    for (Eigen::Index j = 0; j < r.size(); ++j) r(j) = x(2 * j) * x(2 * j) + x(2 * j + 1) * x(2 * j + 1);
    return r;
}

inline Vector torus_moment(const TorusWeightModel& t, const Vector& x)
{
    return 0.5 * t.weights.cast<double>() * squared_moduli(x) + t.offset;
}

// q x 2n Jacobian of the quadratic moment map.
inline Matrix torus_moment_jacobian(const TorusWeightModel& t, const Vector& x)
{
    Matrix J(t.q, 2 * t.n);
    for (int i = 0; i < t.q; ++i) {
        for (int j = 0; j < t.n; ++j) {
            const double w = static_cast<double>(t.weights(i, j));
            J(i, 2 * j) = w * x(2 * j);
            J(i, 2 * j + 1) = w * x(2 * j + 1);
        }
    }
    return J;
}

inline Vector torus_action(const TorusWeightModel& t, const Vector& x, int i)
{
    Vector v(2 * t.n);
    for (int j = 0; j < t.n; ++j) {
        const double w = static_cast<double>(t.weights(i, j));
        v(2 * j) = -w * x(2 * j + 1);
        v(2 * j + 1) = w * x(2 * j);
    }
    return v;
}

inline double chart_scale(const ChartModel& c)
{
    return (c.domain.hi - c.domain.lo).cwiseAbs().maxCoeff();
}

/// Central-difference Jacobian, step 1e-5 times the domain scale.
inline Matrix finite_difference_jacobian(const ChartModel& c, const Vector& x)
{
    const double h = 1e-5 * chart_scale(c);
    Matrix J(c.q, c.dim);
    for (int k = 0; k < c.dim; ++k) {
        Vector xp = x, xm = x;
        xp(k) += h;
        xm(k) -= h;
        J.col(k) = (c.moment_eval(xp) - c.moment_eval(xm)) / (2.0 * h);
    }
    return J;
}

}  // namespace detail

/// Matrix of omega in chart coordinates: entry (a, b) is omega(e_a, e_b).
inline Matrix evaluate_omega(const HamiltonianModel& m, const Vector& x)
{
    detail::check_dimension(m, x);
    return std::visit(
        [&](const auto& k) -> Matrix {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, TorusWeightModel>) {
                return detail::standard_blocks(k.n);
            } else if constexpr (std::is_same_v<T, SymmetryQuotient>) {
                return detail::standard_blocks(k.base.n);
            } else if constexpr (std::is_same_v<T, SurfaceProduct>) {
                Matrix w = Matrix::Zero(2 + 2 * k.torus.n, 2 + 2 * k.torus.n);
                w.topLeftCorner(2, 2) = detail::standard_blocks(1, k.surface.area);
                w.bottomRightCorner(2 * k.torus.n, 2 * k.torus.n) = detail::standard_blocks(k.torus.n);
                return w;
            } else {
                detail::check_chart_domain(k, x);
                return k.omega_eval(x);
            }
        },
        m.kind);
}

/// Transverse moment map (values in R^q).
inline Vector moment(const HamiltonianModel& m, const Vector& x)
{
    detail::check_dimension(m, x);
    if (auto* c = std::get_if<ChartModel>(&m.kind)) {
        detail::check_chart_domain(*c, x);
        return c->moment_eval(x);
    }
    const auto& t = *torus_part(m);
    if (std::holds_alternative<SurfaceProduct>(m.kind)) return detail::torus_moment(t, x.tail(2 * t.n));
    return detail::torus_moment(t, x);
}

/// q x dim Jacobian of the transverse moment map: analytic for weight models,
/// central differences for chart models.
inline Matrix moment_jacobian(const HamiltonianModel& m, const Vector& x)
{
    detail::check_dimension(m, x);
    if (auto* c = std::get_if<ChartModel>(&m.kind)) {
        detail::check_chart_domain(*c, x);
        return detail::finite_difference_jacobian(*c, x);
    }
    const auto& t = *torus_part(m);
    if (std::holds_alternative<SurfaceProduct>(m.kind)) {
        Matrix J = Matrix::Zero(t.q, 2 + 2 * t.n);
        J.rightCols(2 * t.n) = detail::torus_moment_jacobian(t, x.tail(2 * t.n));
        return J;
    }
    return detail::torus_moment_jacobian(t, x);
}

/// Infinitesimal action of the i-th torus generator (0-based index).
inline Vector infinitesimal_action(const HamiltonianModel& m, const Vector& x, int i)
{
    detail::check_dimension(m, x);
    if (i < 0 || i >= rank(m)) throw DomainError("action index " + std::to_string(i) + " out of range");
    if (auto* c = std::get_if<ChartModel>(&m.kind)) {
        detail::check_chart_domain(*c, x);
        return c->action_eval(x, i);
    }
    const auto& t = *torus_part(m);
    if (std::holds_alternative<SurfaceProduct>(m.kind)) {
        Vector v = Vector::Zero(2 + 2 * t.n);
        v.tail(2 * t.n) = detail::torus_action(t, x.tail(2 * t.n), i);
        return v;
    }
    return detail::torus_action(t, x, i);
}

/// Basis (columns) of the leafwise action directions; empty for classical models.
inline Matrix leaf_frame(const HamiltonianModel& m, const Vector& x)
{
    detail::check_dimension(m, x);
    const int dim = real_dimension(m);
    if (auto* c = std::get_if<ChartModel>(&m.kind)) {
        if (c->leaf_dim == 0 || !c->leaf_frame_eval) return Matrix(dim, 0);
        return c->leaf_frame_eval(x);
    }
    if (std::holds_alternative<SurfaceProduct>(m.kind)) return Matrix::Identity(dim, 2);
    return Matrix(dim, 0);
}

/// Jacobian (leaf_dim x dim) of the leafwise component of the moment map.
inline Matrix leaf_moment_jacobian(const HamiltonianModel& m, const Vector& x)
{
    detail::check_dimension(m, x);
    const int dim = real_dimension(m);
    if (std::holds_alternative<SurfaceProduct>(m.kind)) return Matrix::Identity(2, dim);
    if (auto* c = std::get_if<ChartModel>(&m.kind); c && c->leaf_dim > 0) {
        throw DomainError("chart models with leafwise directions need an explicit leaf moment");
    }
    return Matrix(0, dim);
}

/**
 * Pullback of the leaf symplectic form mu^* omega_F evaluated on pairs of
 * vectors: returns the matrix (mu^* omega_F)(u_a, u_b) for the columns of U.
 */
inline Matrix leaf_form_pullback(const HamiltonianModel& m, const Vector& x, const Matrix& U)
{
    detail::check_dimension(m, x);
    if (auto* p = std::get_if<SurfaceProduct>(&m.kind)) {
        // the leaf coordinate of mu is (s_1, s_2); omega_F = A ds_1 ^ ds_2
        Matrix wF(2, 2);
        wF << 0.0, p->surface.area, -p->surface.area, 0.0;
        const Matrix dU = U.topRows(2);
        return dU.transpose() * wF * dU;
    }
    return Matrix::Zero(U.cols(), U.cols());
}

/// Absolute Pfaffian sqrt(|det w|) of a skew matrix; 1 for the empty matrix.
inline double abs_pfaffian(const Matrix& w)
{
    if (w.size() == 0) return 1.0;
    return std::sqrt(std::abs(w.determinant()));
}

/// Liouville density |omega^top / top!| relative to chart Lebesgue measure.
inline double liouville_density(const HamiltonianModel& m, const Vector& x)
{
    const double pf = abs_pfaffian(evaluate_omega(m, x));
    if (pf < kDegeneracyThreshold) throw DegeneracyError("omega is degenerate at the given point");
    return pf;
}

// ---- symmetry groups ----------------------------------------------------

/// Closure of the generated group, by breadth-first multiplication. Stops at `limit`.
inline std::vector<IntMatrix> enumerate_group(const std::vector<IntMatrix>& gens, Eigen::Index dim, std::size_t limit = 4096)
{
    std::vector<IntMatrix> elems{IntMatrix::Identity(dim, dim)};
    for (std::size_t head = 0; head < elems.size() && elems.size() < limit; ++head) {
        for (const auto& g : gens) {
            IntMatrix prod = g * elems[head];
            bool known = false;
            for (const auto& e : elems) {
                if (e == prod) {
                    known = true;
                    break;
                }
            }
            if (!known) elems.push_back(std::move(prod));
        }
    }
    return elems;
}

/// Permutation of complex coordinate pairs induced by a signed permutation,
/// or nullopt when it does not map coordinate planes to coordinate planes.
inline std::optional<std::vector<int>> pair_permutation(const IntMatrix& g)
{
    const Eigen::Index n = g.rows() / 2;
    std::vector<int> perm(static_cast<std::size_t>(n), -1);
    for (Eigen::Index j = 0; j < n; ++j) {
        int target = -1;
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
            if (g(r, 2 * j) != 0 || g(r, 2 * j + 1) != 0) {
                const int pr = static_cast<int>(r / 2);
                if (target >= 0 && target != pr) return std::nullopt;
                target = pr;
            }
        }
        if (target < 0) return std::nullopt;
        perm[static_cast<std::size_t>(j)] = target;
    }
    return perm;
}

// ---- validation ---------------------------------------------------------

struct ValidationReport {
    double max_skew_residual = 0.0;
    double min_abs_pfaffian = std::numeric_limits<double>::infinity();
    double max_moment_residual = 0.0;
    bool effective = true;
    std::vector<std::int64_t> invariant_factors;
    bool locally_free = true;
    bool symmetry_ok = true;
    std::vector<std::string> messages;
    bool passed = true;
};

/// Random point in the interior of the model's chart, away from coordinate axes.
inline Vector probe_point(const HamiltonianModel& m, SubstreamRng& rng)
{
    const int dim = real_dimension(m);
    Vector x(dim);
    if (auto* c = std::get_if<ChartModel>(&m.kind)) {
        for (int i = 0; i < dim; ++i) {
            const double lo = c->domain.lo(i), hi = c->domain.hi(i);
            const double pad = c->periodic[static_cast<std::size_t>(i)] ? 0.0 : 0.01 * (hi - lo);
            x(i) = rng.uniform(lo + pad, hi - pad);
        }
        return x;
    }
    for (int i = 0; i < dim; ++i) {
        double v = rng.uniform(0.1, 1.5);
        x(i) = rng.uniform() < 0.5 ? -v : v;
    }
    if (std::holds_alternative<SurfaceProduct>(m.kind)) {
        x(0) = rng.uniform();
        x(1) = rng.uniform();
    }
    return x;
}

/**
 * Checks skewness and nondegeneracy of omega, the infinitesimal moment
 * condition omega(alpha_i, v) = d mu_i(v), effectiveness via Smith normal
 * form, local freeness, and symmetry generators. Failures are reported, not
 * thrown.
 */
inline ValidationReport validate_model(const HamiltonianModel& m, double tol = 1e-6, int probes = 64,
                                       std::uint64_t seed = 1)
{
    if (!(tol > 0.0)) throw ConfigError("validate_model: tolerance must be positive");
    ValidationReport rep;
    SubstreamRng rng(seed, 0);
    const int q = rank(m);
    const int dim = real_dimension(m);

    for (int p = 0; p < probes; ++p) {
        const Vector x = probe_point(m, rng);
        const Matrix w = evaluate_omega(m, x);
        rep.max_skew_residual = std::max(rep.max_skew_residual, (w + w.transpose()).cwiseAbs().maxCoeff());
        rep.min_abs_pfaffian = std::min(rep.min_abs_pfaffian, abs_pfaffian(w));

        const Matrix J = moment_jacobian(m, x);
        Matrix actions(dim, q);
        for (int i = 0; i < q; ++i) actions.col(i) = infinitesimal_action(m, x, i);
        for (int k = 0; k < 4; ++k) {
            Vector v(dim);
            for (int a = 0; a < dim; ++a) v(a) = rng.uniform(-1.0, 1.0);
            const Vector lhs = actions.transpose() * w * v;
            rep.max_moment_residual = std::max(rep.max_moment_residual, (lhs - J * v).cwiseAbs().maxCoeff());
        }
        Eigen::JacobiSVD<Matrix> svd(actions);
        const auto& sv = svd.singularValues();
        if (q > 0 && sv(q - 1) < 1e-9 * std::max(1.0, sv(0))) {
            rep.locally_free = false;
        }
    }
    if (rep.max_skew_residual != 0.0) rep.messages.push_back("omega is not exactly skew-symmetric");
    if (rep.min_abs_pfaffian < kDegeneracyThreshold) rep.messages.push_back("omega is degenerate at a probe point");
    if (rep.max_moment_residual > tol) {
        rep.messages.push_back("infinitesimal moment condition violated (residual " +
                               std::to_string(rep.max_moment_residual) + ")");
    }

    const IntMatrix* weights = nullptr;
    if (auto* t = torus_part(m)) {
        weights = &t->weights;
        for (Eigen::Index j = 0; j < t->weights.cols(); ++j) {
            if ((t->weights.col(j).array() == 0).all()) {
                rep.locally_free = false;
                rep.messages.push_back("weight column " + std::to_string(j) + " is zero");
            }
        }
        if (t->window.dim() != t->q || t->window.empty()) rep.messages.push_back("moment window is empty or has wrong dimension");
    } else if (auto* c = std::get_if<ChartModel>(&m.kind); c && c->period_weights) {
        weights = &*c->period_weights;
    }
    if (weights) {
        const SmithForm snf = smith_normal_form(*weights);
        rep.invariant_factors = snf.invariant_factors();
        if (snf.rank() != q) {
            rep.effective = false;
            rep.messages.push_back("weight matrix has rank " + std::to_string(snf.rank()) + " < q");
        }
        for (auto d : rep.invariant_factors) {
            if (d != 1) {
                rep.effective = false;
                rep.messages.push_back("not effective: Smith invariant factor " + std::to_string(d) +
                                       " gives a kernel of order " + std::to_string(snf.torsion_order()));
                break;
            }
        }
    }
    if (!rep.locally_free) rep.messages.push_back("action is not locally free at every probe point");

    if (auto* s = std::get_if<SymmetryQuotient>(&m.kind)) {
        const HamiltonianModel base{m.id, s->base};
        const IntMatrix omega_int = detail::standard_blocks(s->base.n).cast<std::int64_t>();
        for (const auto& g : s->generators) {
            if (g.rows() != dim || g.cols() != dim) {
                rep.symmetry_ok = false;
                rep.messages.push_back("symmetry generator has wrong size");
                continue;
            }
            if (g.transpose() * omega_int * g != omega_int) {
                rep.symmetry_ok = false;
                rep.messages.push_back("symmetry generator does not preserve omega");
            }
            const auto perm = pair_permutation(g);
            bool keeps_moment = perm.has_value();
            if (perm) {
                for (int j = 0; j < s->base.n; ++j) {
                    if (s->base.weights.col(j) != s->base.weights.col((*perm)[static_cast<std::size_t>(j)])) keeps_moment = false;
                }
            }
            if (!keeps_moment) {
                rep.symmetry_ok = false;
                rep.messages.push_back("symmetry generator does not preserve the moment map");
            }
            SubstreamRng grng(seed, 1);
            for (int p = 0; p < 8; ++p) {
                const Vector x = probe_point(base, grng);
                const Vector gx = g.cast<double>() * x;
                for (int i = 0; i < q; ++i) {
                    const Vector lhs = g.cast<double>() * infinitesimal_action(base, x, i);
                    if ((lhs - infinitesimal_action(base, gx, i)).cwiseAbs().maxCoeff() > 1e-12) {
                        rep.symmetry_ok = false;
                    }
                }
            }
        }
        const auto group = enumerate_group(s->generators, dim);
        if (static_cast<int>(group.size()) != s->group_order) {
            rep.symmetry_ok = false;
            rep.messages.push_back("generators produce a group of order " + std::to_string(group.size()) +
                                   ", declared " + std::to_string(s->group_order));
        }
        for (std::size_t k = 1; k < group.size(); ++k) {
            const auto perm = pair_permutation(group[k]);
            bool moves = false;
            if (perm) {
                for (int j = 0; j < s->base.n; ++j) moves = moves || (*perm)[static_cast<std::size_t>(j)] != j;
            }
            if (!moves) {
                rep.symmetry_ok = false;
                rep.messages.push_back("a group element fixes every coordinate plane (it lies in the torus)");
                break;
            }
        }
    }

    rep.passed = rep.max_skew_residual == 0.0 && rep.min_abs_pfaffian >= kDegeneracyThreshold &&
                 rep.max_moment_residual <= tol && rep.effective && rep.locally_free && rep.symmetry_ok;
    return rep;
}

// ---- constructors -------------------------------------------------------

inline TorusWeightModel make_torus_model(const IntMatrix& W, const Vector& offset, const Box& window)
{
    TorusWeightModel t;
    t.q = static_cast<int>(W.rows());
    t.n = static_cast<int>(W.cols());
    t.weights = W;
    t.offset = offset.size() ? offset : Vector::Zero(t.q);
    t.window = window;
    if (t.offset.size() != t.q) throw ConfigError("offset length must equal the torus rank");
    if (t.window.dim() != t.q) throw ConfigError("window dimension must equal the torus rank");
    if (t.q < 1 || t.n < 1 || t.q > t.n) throw ConfigError("weight matrix must satisfy 1 <= q <= n");
    return t;
}

/**
 * Product of `factors` round spheres in cylindrical chart coordinates
 * (theta_k, z_k), omega = sum d theta_k ^ d z_k, with the diagonal circle
 * action and moment map sum_k z_k (plus offset). One factor is the classical
 * Archimedes sphere; two factors give the tent-shaped DH density.
 */
inline ChartModel make_sphere_product(int factors, const Box& win, double offset = 0.0)
{
    if (factors < 1) throw ConfigError("sphere model needs at least one factor");
    ChartModel c;
    c.dim = 2 * factors;
    c.q = 1;
    Vector lo(c.dim), hi(c.dim);
    for (int k = 0; k < factors; ++k) {
        lo(2 * k) = 0.0;
        hi(2 * k) = kTwoPi;
        lo(2 * k + 1) = -1.0;
        hi(2 * k + 1) = 1.0;
        c.periodic.push_back(true);
        c.periodic.push_back(false);
    }
    c.domain = Box(lo, hi);
    c.window = win;
    c.omega_eval = [factors](const Vector&) {
        Matrix w = Matrix::Zero(2 * factors, 2 * factors);
        for (int k = 0; k < factors; ++k) {
            w(2 * k, 2 * k + 1) = 1.0;
            w(2 * k + 1, 2 * k) = -1.0;
        }
        return w;
    };
    c.moment_eval = [factors, offset](const Vector& x) {
        double s = offset;
        for (int k = 0; k < factors; ++k) s += x(2 * k + 1);
        return Vector::Constant(1, s);
    };
    c.action_eval = [factors](const Vector&, int) {
        Vector v = Vector::Zero(2 * factors);
        for (int k = 0; k < factors; ++k) v(2 * k) = 1.0;
        return v;
    };
    c.period_weights = IntMatrix::Ones(1, factors);
    for (int j = 0; j <= factors; ++j) c.wall_values.push_back(offset - factors + 2.0 * j);
    c.sampling_box = [factors, offset, dom = c.domain](const Box& w) {
        Box b = dom;
        const double slack = factors - 1;
        for (int k = 0; k < factors; ++k) {
            b.lo(2 * k + 1) = std::clamp(w.lo(0) - offset - slack, -1.0, 1.0);
            b.hi(2 * k + 1) = std::clamp(w.hi(0) - offset + slack, -1.0, 1.0);
        }
        return b;
    };
    // (2 pi)^k times the volume of { z in [-1,1]^k : lo <= sum z + offset <= hi }
    c.liouville_volume = [factors, offset](const Box& w) {
        HPolytope P;
        P.A = Matrix::Zero(0, factors);
        for (int k = 0; k < factors; ++k) {
            P.add(Vector::Unit(factors, k), 1.0);
            P.add(-Vector::Unit(factors, k), 1.0);
        }
        P.add(Vector::Ones(factors), w.hi(0) - offset);
        P.add(-Vector::Ones(factors), offset - w.lo(0));
        return std::pow(kTwoPi, factors) * polytope_volume(P);
    };
    return c;
}

}  // namespace dhlab::model
