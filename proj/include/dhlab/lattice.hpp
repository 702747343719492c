#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "dhlab/box.hpp"
#include "dhlab/errors.hpp"
#include "dhlab/model.hpp"
#include "dhlab/polynomial.hpp"

namespace dhlab::lattice {

using dhlab::AffineTransition;
using dhlab::apply_transition;
using dhlab::is_integral_affine;

/**
 * Lattice data in one transverse chart: the rows of L are the lattice
 * covectors lambda_1..lambda_q in chart coordinates, and iota_generic is the
 * generic number of components of the isotropy groups.
 */
struct IntegralAffineData {
    Eigen::MatrixXd L;
    int iota_generic = 1;

    int q() const { return static_cast<int>(L.rows()); }

    void validate() const
    {
        if (L.rows() != L.cols() || L.rows() == 0) throw ConfigError("lattice basis must be a nonempty square matrix");
        if (!(std::abs(L.determinant()) > 0.0)) throw ConfigError("lattice basis is singular");
        if (iota_generic < 1) throw ConfigError("iota must be at least 1");
    }
};

inline IntegralAffineData standard_lattice(int q, int iota = 1)
{
    return {Eigen::MatrixXd::Identity(q, q), iota};
}

/**
 * Lattice basis intrinsic to a model: the covectors dual to the generators
 * whose time-2pi flows close up. Every model here is written so that this is
 * the standard basis.
 */
inline Eigen::MatrixXd intrinsic_lattice_basis(const model::HamiltonianModel& m)
{
    return Eigen::MatrixXd::Identity(model::rank(m), model::rank(m));
}

/// Density of the affine measure relative to chart Lebesgue measure: |det L| / iota.
inline double affine_density(const IntegralAffineData& data)
{
    data.validate();
    return std::abs(data.L.determinant()) / static_cast<double>(data.iota_generic);
}

/// Affine-measure mass of a box; an empty box has mass 0.
inline double affine_measure_eval(const IntegralAffineData& data, const Box& region)
{
    if (region.dim() != data.q()) throw DomainError("affine_measure_eval: region dimension differs from lattice rank");
    return affine_density(data) * region.volume();
}

}  // namespace dhlab::lattice
