#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dhlab/errors.hpp"
#include "dhlab/lattice.hpp"
#include "dhlab/model.hpp"
#include "dhlab/rng.hpp"

namespace dhlab::identity {

using model::Matrix;
using model::Vector;

/**
 * Adapted basis of the tangent space at x, split into four blocks:
 *   B1  torus action vectors dual to the lattice basis,
 *   B2  a complement of B1 inside ker(d mu),
 *   B3  leafwise action vectors,
 *   B4  vectors w_j with (mu^* lambda_i)(w_j) = delta_ij.
 * Each block stores its vectors as columns.
 */
struct FrameDecomposition {
    Vector x;
    Matrix B1, B2, B3, B4;

    std::array<int, 4> dims() const
    {
        return {static_cast<int>(B1.cols()), static_cast<int>(B2.cols()), static_cast<int>(B3.cols()),
                static_cast<int>(B4.cols())};
    }

    Matrix full() const
    {
        Matrix F(x.size(), B1.cols() + B2.cols() + B3.cols() + B4.cols());
        F << B1, B2, B3, B4;
        return F;
    }
};

struct ResidualTriple {
    double a = 0.0;  // i_{alpha_i} omega on B1, B2, B3
    double b = 0.0;  // omega(alpha_i, w_j) - delta_ij
    double c = 0.0;  // omega|V3 + (mu^* omega_F)|V3
};

namespace detail {

// Orthonormal basis of the null space of J.
inline Matrix kernel_basis(const Matrix& J, Eigen::Index cols)
{
    if (J.rows() == 0) return Matrix::Identity(cols, cols);
    Eigen::JacobiSVD<Matrix> svd(J, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    Eigen::Index r = 0;
    const double cut = 1e-10 * std::max(1.0, sv.size() ? sv(0) : 0.0);
    while (r < sv.size() && sv(r) > cut) ++r;
    return svd.matrixV().rightCols(cols - r);
}

// Orthonormal basis of the part of span(K) orthogonal to span(B).
inline Matrix complement_in(const Matrix& K, const Matrix& B)
{
    Matrix R = K;
    if (B.cols() > 0) {
        Eigen::HouseholderQR<Matrix> qr(B);
        const Matrix Qb = qr.householderQ() * Matrix::Identity(B.rows(), B.cols());
        R -= Qb * (Qb.transpose() * K);
    }
    Eigen::JacobiSVD<Matrix> svd(R, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    Eigen::Index r = 0;
    const double cut = 1e-9 * std::max(1.0, sv.size() ? sv(0) : 0.0);
    while (r < sv.size() && sv(r) > cut) ++r;
    return svd.matrixU().leftCols(r);
}

inline Matrix full_moment_jacobian(const model::HamiltonianModel& m, const Vector& x)
{
    const Matrix JL = model::leaf_moment_jacobian(m, x);
    const Matrix JB = model::moment_jacobian(m, x);
    Matrix J(JL.rows() + JB.rows(), JB.cols());
    J << JL, JB;
    return J;
}

}  // namespace detail

/**
 * Builds the adapted frame at x. B2 is taken Euclidean-orthogonal to B1
 * inside ker(d mu); B4 is the minimum-norm solution of
 * omega(B1_i, w_j) = delta_ij, omega(B2, w_j) = omega(B3, w_j) = 0.
 * Throws FrameError where the action is not locally free.
 */
inline FrameDecomposition build_frames(const model::HamiltonianModel& m, const Vector& x,
                                       const lattice::IntegralAffineData& lat)
{
    lat.validate();
    const int q = model::rank(m);
    const int dim = model::real_dimension(m);
    if (lat.q() != q) throw DomainError("lattice rank differs from model rank");

    Matrix actions(dim, q);
    for (int i = 0; i < q; ++i) actions.col(i) = model::infinitesimal_action(m, x, i);

    FrameDecomposition f;
    f.x = x;
    f.B1 = actions * lat.L.transpose();
    Eigen::JacobiSVD<Matrix> svd(f.B1);
    const auto& sv = svd.singularValues();
    if (sv(q - 1) < 1e-9 * std::max(1.0, sv(0))) throw FrameError("action vectors are dependent: x is not a locally free point");

    const Matrix K = detail::kernel_basis(detail::full_moment_jacobian(m, x), dim);
    f.B2 = detail::complement_in(K, f.B1);
    f.B3 = model::leaf_frame(m, x);
    const int expected_b2 = dim - model::base_dimension(m) - q;
    if (f.B2.cols() != expected_b2) {
        throw FrameError("ker(d mu) has unexpected dimension at x (rank drop of the moment map)");
    }

    const Matrix omega = model::evaluate_omega(m, x);
    const Eigen::Index rows = q + f.B2.cols() + f.B3.cols();
    Matrix E(rows, dim);
    E << f.B1.transpose() * omega, f.B2.transpose() * omega, f.B3.transpose() * omega;
    Matrix rhs = Matrix::Zero(rows, q);
    rhs.topRows(q) = Matrix::Identity(q, q);
    f.B4 = E.completeOrthogonalDecomposition().solve(rhs);

    const Matrix F = f.full();
    if (F.cols() != dim || std::abs(F.determinant()) < 1e-12) throw FrameError("assembled frame is not a basis");
    return f;
}

inline ResidualTriple orthogonality_report(const model::HamiltonianModel& m, const FrameDecomposition& f)
{
    const Matrix omega = model::evaluate_omega(m, f.x);
    ResidualTriple r;
    const int q = static_cast<int>(f.B1.cols());
    for (const Matrix* block : {&f.B1, &f.B2, &f.B3}) {
        if (block->cols() == 0) continue;
        r.a = std::max(r.a, (f.B1.transpose() * omega * *block).cwiseAbs().maxCoeff());
    }
    r.b = (f.B1.transpose() * omega * f.B4 - Matrix::Identity(q, q)).cwiseAbs().maxCoeff();
    if (f.B3.cols() > 0) {
        const Matrix restricted = f.B3.transpose() * omega * f.B3;
        r.c = (restricted + model::leaf_form_pullback(m, f.x, f.B3)).cwiseAbs().maxCoeff();
    }
    return r;
}

/// Both sides of the pointwise density identity, evaluated on a frame.
struct FactorizationSides {
    double liouville = 0.0;  // |omega^top/top!| on the whole frame
    double haar = 0.0;       // Haar density on B1
    double reduced = 0.0;    // |(omega restricted)^top/top!| on B2
    double leaf = 0.0;       // |omega_F^top/top!| on d mu(B3)
    double lattice = 0.0;    // |lambda_1 ^ ... ^ lambda_q| on d mu(B4)

    double rhs() const { return haar * reduced * leaf * lattice; }
    double residual() const { return std::abs(liouville - rhs()) / liouville; }
};

inline FactorizationSides factorization_sides(const model::HamiltonianModel& m, const FrameDecomposition& f,
                                              const lattice::IntegralAffineData& lat)
{
    const Matrix omega = model::evaluate_omega(m, f.x);
    const Matrix F = f.full();
    FactorizationSides s;
    s.liouville = model::abs_pfaffian(F.transpose() * omega * F);

    // Haar density is normalised by the model's own lattice generators
    const int q = model::rank(m);
    Matrix generators(f.x.size(), q);
    for (int i = 0; i < q; ++i) generators.col(i) = model::infinitesimal_action(m, f.x, i);
    generators = generators * lattice::intrinsic_lattice_basis(m).transpose();
    const Matrix coeffs = generators.colPivHouseholderQr().solve(f.B1);
    s.haar = std::abs(coeffs.determinant());

    s.reduced = model::abs_pfaffian(f.B2.transpose() * omega * f.B2);
    s.leaf = model::abs_pfaffian(model::leaf_form_pullback(m, f.x, f.B3));
    s.lattice = std::abs((lat.L * model::moment_jacobian(m, f.x) * f.B4).determinant());
    return s;
}

/// Relative residual of the density identity at x.
inline double density_factorization_residual(const model::HamiltonianModel& m, const Vector& x,
                                             const lattice::IntegralAffineData& lat)
{
    const FrameDecomposition f = build_frames(m, x, lat);
    const FactorizationSides s = factorization_sides(m, f, lat);
    if (!(s.liouville > 0.0)) throw FrameError("degenerate frame");
    return s.residual();
}

/**
 * Sine of the largest principal angle between the omega-orthogonal
 * complement of ker(d mu) and span(B1, B3). Zero when the two coincide.
 */
inline double action_span_residual(const model::HamiltonianModel& m, const FrameDecomposition& f)
{
    const Matrix omega = model::evaluate_omega(m, f.x);
    const Eigen::Index dim = f.x.size();
    const Matrix K = detail::kernel_basis(detail::full_moment_jacobian(m, f.x), dim);
    const Matrix C = detail::kernel_basis(K.transpose() * omega, dim);
    Matrix S(dim, f.B1.cols() + f.B3.cols());
    S << f.B1, f.B3;
    if (C.cols() != S.cols()) return 1.0;
    Eigen::HouseholderQR<Matrix> qr(S);
    const Matrix Qs = qr.householderQ() * Matrix::Identity(dim, S.cols());
    const Matrix resid = Qs - C * (C.transpose() * Qs);
    return resid.norm() == 0.0 ? 0.0 : Eigen::JacobiSVD<Matrix>(resid).singularValues()(0);
}

// ---- batch report -------------------------------------------------------

struct IdentityReport {
    std::string model_id;
    int points = 0;
    std::array<int, 4> frame_dims{};
    double residual_median = 0.0;
    double residual_p90 = 0.0;
    double residual_p99 = 0.0;
    double residual_max = 0.0;
    Vector worst_point;
    ResidualTriple max_orthogonality;
    double max_action_span = 0.0;

    nlohmann::json to_json() const
    {
        return {{"model", model_id},
                {"points", points},
                {"frame_dims", frame_dims},
                {"residual_quantiles", {{"p50", residual_median}, {"p90", residual_p90}, {"p99", residual_p99}, {"max", residual_max}}},
                {"worst_point", std::vector<double>(worst_point.data(), worst_point.data() + worst_point.size())},
                {"orthogonality", {{"a", max_orthogonality.a}, {"b", max_orthogonality.b}, {"c", max_orthogonality.c}}},
                {"action_span_residual", max_action_span}};
    }
};

/// Evaluates the identity and the three lemmas at `points` random locally free points.
inline IdentityReport identity_batch(const model::HamiltonianModel& m, const lattice::IntegralAffineData& lat, int points,
                                     std::uint64_t seed)
{
    IdentityReport rep;
    rep.model_id = m.id;
    rep.points = points;
    SubstreamRng rng(seed, 0xf7a3e);
    std::vector<double> residuals;
    for (int p = 0; p < points; ++p) {
        const Vector x = model::probe_point(m, rng);
        const FrameDecomposition f = build_frames(m, x, lat);
        rep.frame_dims = f.dims();
        const double r = factorization_sides(m, f, lat).residual();
        if (residuals.empty() || r > rep.residual_max) {
            rep.residual_max = r;
            rep.worst_point = x;
        }
        residuals.push_back(r);
        const ResidualTriple t = orthogonality_report(m, f);
        rep.max_orthogonality.a = std::max(rep.max_orthogonality.a, t.a);
        rep.max_orthogonality.b = std::max(rep.max_orthogonality.b, t.b);
        rep.max_orthogonality.c = std::max(rep.max_orthogonality.c, t.c);
        rep.max_action_span = std::max(rep.max_action_span, action_span_residual(m, f));
    }
    std::sort(residuals.begin(), residuals.end());
    auto quantile = [&](double p) {
        if (residuals.empty()) return 0.0;
        return residuals[static_cast<std::size_t>(p * static_cast<double>(residuals.size() - 1))];
    };
    rep.residual_median = quantile(0.5);
    rep.residual_p90 = quantile(0.9);
    rep.residual_p99 = quantile(0.99);
    return rep;
}

}  // namespace dhlab::identity
