#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "dhlab/box.hpp"
#include "dhlab/errors.hpp"

namespace dhlab {

/// Regular rectangular grid on a box in R^q; bins are numbered with axis 0 fastest.
class Grid {
public:
    Grid() = default;

    Grid(Box box, std::vector<int> bins) : box_(std::move(box)), bins_(std::move(bins))
    {
        if (static_cast<Eigen::Index>(bins_.size()) != box_.dim()) throw ConfigError("grid: one bin count per axis required");
        for (int b : bins_) {
            if (b < 1) throw ConfigError("grid: bin counts must be positive");
        }
        if ((box_.hi.array() <= box_.lo.array()).any()) throw ConfigError("grid: empty axis range");
    }

    static Grid uniform(const Box& box, int bins_per_axis)
    {
        return Grid(box, std::vector<int>(static_cast<std::size_t>(box.dim()), bins_per_axis));
    }

    const Box& box() const { return box_; }
    const std::vector<int>& bins() const { return bins_; }
    int dim() const { return static_cast<int>(bins_.size()); }

    std::size_t size() const
    {
        std::size_t s = bins_.empty() ? 0 : 1;
        for (int b : bins_) s *= static_cast<std::size_t>(b);
        return s;
    }

    double width(int axis) const
    {
        return (box_.hi(axis) - box_.lo(axis)) / bins_[static_cast<std::size_t>(axis)];
    }

    double max_width() const
    {
        double w = 0.0;
        for (int a = 0; a < dim(); ++a) w = std::max(w, width(a));
        return w;
    }

    double cell_volume() const
    {
        double v = 1.0;
        for (int a = 0; a < dim(); ++a) v *= width(a);
        return v;
    }

    std::vector<int> unravel(std::size_t index) const
    {
        std::vector<int> idx(bins_.size());
        for (std::size_t a = 0; a < bins_.size(); ++a) {
            idx[a] = static_cast<int>(index % static_cast<std::size_t>(bins_[a]));
            index /= static_cast<std::size_t>(bins_[a]);
        }
        return idx;
    }

    std::size_t ravel(const std::vector<int>& idx) const
    {
        std::size_t index = 0;
        for (std::size_t a = bins_.size(); a-- > 0;) index = index * static_cast<std::size_t>(bins_[a]) + static_cast<std::size_t>(idx[a]);
        return index;
    }

    /// Bin containing t; the upper face of the grid belongs to the last bin.
    std::optional<std::size_t> locate(const Eigen::VectorXd& t) const
    {
        std::size_t index = 0;
        for (std::size_t a = bins_.size(); a-- > 0;) {
            const auto ax = static_cast<Eigen::Index>(a);
            const double rel = (t(ax) - box_.lo(ax)) / (box_.hi(ax) - box_.lo(ax));
            if (!(rel >= 0.0 && rel <= 1.0)) return std::nullopt;
            int k = static_cast<int>(std::floor(rel * bins_[a]));
            if (k == bins_[a]) --k;
            index = index * static_cast<std::size_t>(bins_[a]) + static_cast<std::size_t>(k);
        }
        return index;
    }

    Box cell(std::size_t index) const
    {
        const auto idx = unravel(index);
        Eigen::VectorXd lo(dim()), hi(dim());
        for (int a = 0; a < dim(); ++a) {
            lo(a) = box_.lo(a) + width(a) * idx[static_cast<std::size_t>(a)];
            hi(a) = box_.lo(a) + width(a) * (idx[static_cast<std::size_t>(a)] + 1);
        }
        return Box(lo, hi);
    }

    Eigen::VectorXd center(std::size_t index) const
    {
        const Box c = cell(index);
        return 0.5 * (c.lo + c.hi);
    }

private:
    Box box_;
    std::vector<int> bins_;
};

}  // namespace dhlab
