#pragma once

#include <algorithm>
#include <vector>

#include <Eigen/Core>

#include "dhlab/errors.hpp"

namespace dhlab {

/// Closed axis-aligned box in R^d.
struct Box {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    Box() = default;
    Box(Eigen::VectorXd l, Eigen::VectorXd h) : lo(std::move(l)), hi(std::move(h))
    {
        if (lo.size() != hi.size()) throw ConfigError("box: bound dimensions differ");
    }

    static Box interval(double l, double h) { return Box(Eigen::VectorXd::Constant(1, l), Eigen::VectorXd::Constant(1, h)); }

    static Box cube(Eigen::Index d, double l, double h)
    {
        return Box(Eigen::VectorXd::Constant(d, l), Eigen::VectorXd::Constant(d, h));
    }

    Eigen::Index dim() const { return lo.size(); }

    double volume() const
    {
        double v = 1.0;
        for (Eigen::Index i = 0; i < dim(); ++i) v *= std::max(0.0, hi(i) - lo(i));
        return v;
    }

    bool empty() const { return volume() <= 0.0; }

    bool contains(const Eigen::VectorXd& p) const
    {
        return p.size() == dim() && (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
    }

    Box intersect(const Box& o) const
    {
        if (o.dim() != dim()) throw DomainError("box: dimension mismatch");
        return Box(lo.cwiseMax(o.lo), hi.cwiseMin(o.hi).cwiseMax(lo.cwiseMax(o.lo)));
    }

    Box shifted(const Eigen::VectorXd& by) const { return Box(lo + by, hi + by); }
};

}  // namespace dhlab
