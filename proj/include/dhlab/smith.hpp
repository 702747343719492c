#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <vector>

#include <Eigen/Core>

namespace dhlab {

using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/**
 * Smith normal form P * A * Q = D of an integer matrix.
 *
 * P and Q are unimodular; D is diagonal with nonnegative entries d_1 | d_2 | ...
 * The unimodular factors are kept because the reduction module uses them as
 * adapted angle coordinates.
 */
struct SmithForm {
    IntMatrix P;
    IntMatrix D;
    IntMatrix Q;

    /// Nonzero diagonal entries of D, in order.
    std::vector<std::int64_t> invariant_factors() const
    {
        std::vector<std::int64_t> out;
        for (Eigen::Index i = 0; i < std::min(D.rows(), D.cols()); ++i) {
            if (D(i, i) != 0) out.push_back(D(i, i));
        }
        return out;
    }

    Eigen::Index rank() const { return static_cast<Eigen::Index>(invariant_factors().size()); }

    /// Order of the torsion part of coker(A): product of the invariant factors.
    std::int64_t torsion_order() const
    {
        std::int64_t prod = 1;
        for (auto d : invariant_factors()) prod *= d;
        return prod;
    }
};

namespace detail {

inline void swap_rows(IntMatrix& m, Eigen::Index a, Eigen::Index b)
{
    if (a != b) m.row(a).swap(m.row(b));
}

inline void swap_cols(IntMatrix& m, Eigen::Index a, Eigen::Index b)
{
    if (a != b) m.col(a).swap(m.col(b));
}

}  // namespace detail

inline SmithForm smith_normal_form(const IntMatrix& A)
{
    const Eigen::Index rows = A.rows();
    const Eigen::Index cols = A.cols();
    SmithForm s{IntMatrix::Identity(rows, rows), A, IntMatrix::Identity(cols, cols)};
    IntMatrix& D = s.D;

    for (Eigen::Index t = 0; t < std::min(rows, cols); ++t) {
        for (;;) {
            // smallest nonzero entry of the trailing block becomes the pivot
            Eigen::Index pi = -1, pj = -1;
            std::int64_t best = 0;
            for (Eigen::Index i = t; i < rows; ++i) {
                for (Eigen::Index j = t; j < cols; ++j) {
                    const std::int64_t v = std::llabs(D(i, j));
                    if (v != 0 && (best == 0 || v < best)) {
                        best = v;
                        pi = i;
                        pj = j;
                    }
                }
            }
            if (pi < 0) return s;

            detail::swap_rows(D, t, pi);
            detail::swap_rows(s.P, t, pi);
            detail::swap_cols(D, t, pj);
            detail::swap_cols(s.Q, t, pj);

            bool clean = true;
            for (Eigen::Index i = t + 1; i < rows; ++i) {
                const std::int64_t k = D(i, t) / D(t, t);
                if (k != 0) {
                    D.row(i) -= k * D.row(t);
                    s.P.row(i) -= k * s.P.row(t);
                }
                if (D(i, t) != 0) clean = false;
            }
            for (Eigen::Index j = t + 1; j < cols; ++j) {
                const std::int64_t k = D(t, j) / D(t, t);
                if (k != 0) {
                    D.col(j) -= k * D.col(t);
                    s.Q.col(j) -= k * s.Q.col(t);
                }
                if (D(t, j) != 0) clean = false;
            }
            if (!clean) continue;

            // divisibility: fold an offending row into row t and retry
            bool divides = true;
            for (Eigen::Index i = t + 1; i < rows && divides; ++i) {
                for (Eigen::Index j = t + 1; j < cols; ++j) {
                    if (D(i, j) % D(t, t) != 0) {
                        D.row(t) += D.row(i);
                        s.P.row(t) += s.P.row(i);
                        divides = false;
                        break;
                    }
                }
            }
            if (divides) break;
        }
        if (D(t, t) < 0) {
            D.row(t) *= -1;
            s.P.row(t) *= -1;
        }
    }
    return s;
}

/// Determinant of a small integer matrix by fraction-free elimination (Bareiss).
inline std::int64_t integer_determinant(IntMatrix m)
{
    const Eigen::Index n = m.rows();
    if (n != m.cols()) return 0;
    if (n == 0) return 1;
    std::int64_t sign = 1, prev = 1;
    for (Eigen::Index k = 0; k < n - 1; ++k) {
        if (m(k, k) == 0) {
            Eigen::Index swap = -1;
            for (Eigen::Index i = k + 1; i < n; ++i) {
                if (m(i, k) != 0) {
                    swap = i;
                    break;
                }
            }
            if (swap < 0) return 0;
            m.row(k).swap(m.row(swap));
            sign = -sign;
        }
        for (Eigen::Index i = k + 1; i < n; ++i) {
            for (Eigen::Index j = k + 1; j < n; ++j) {
                m(i, j) = (m(i, j) * m(k, k) - m(i, k) * m(k, j)) / prev;
            }
        }
        prev = m(k, k);
    }
    return sign * m(n - 1, n - 1);
}

}  // namespace dhlab
