#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "sobex/cube.hpp"

namespace sobex {

constexpr int kMaxDim = 4;

using CellIndex = std::int64_t;

/// Per-axis cell coordinates. Fixed capacity avoids allocation in hot loops.
struct CellCoord {
    std::array<std::int64_t, kMaxDim> v{};
    int dim = 0;

    std::int64_t& operator[](int i) { return v[std::size_t(i)]; }
    std::int64_t operator[](int i) const { return v[std::size_t(i)]; }
    bool operator==(const CellCoord& o) const {
        if (dim != o.dim) return false;
        for (int i = 0; i < dim; ++i) if (v[std::size_t(i)] != o.v[std::size_t(i)]) return false;
        return true;
    }
};

/// Uniform grid: cell i has center origin + (i + 1/2) h per axis.
/// Each cell is a Cube with half_side h/2.
class GridSpec {
public:
    GridSpec() = default;
    GridSpec(std::vector<double> origin, double spacing, std::vector<std::int64_t> extents);

    int dim() const { return dim_; }
    double spacing() const { return spacing_; }
    const std::vector<double>& origin() const { return origin_; }
    const std::vector<std::int64_t>& extents() const { return extents_; }
    std::int64_t extent(int axis) const { return extents_[std::size_t(axis)]; }
    std::int64_t total_cells() const { return total_; }
    std::int64_t stride(int axis) const { return strides_[std::size_t(axis)]; }

    CellIndex linear(const CellCoord& c) const {
        CellIndex idx = 0;
        for (int a = 0; a < dim_; ++a) idx += c[a] * strides_[std::size_t(a)];
        return idx;
    }

    CellCoord decode(CellIndex idx) const {
        CellCoord c;
        c.dim = dim_;
        for (int a = 0; a < dim_; ++a) {
            c[a] = idx / strides_[std::size_t(a)];
            idx -= c[a] * strides_[std::size_t(a)];
        }
        return c;
    }

    bool in_bounds(const CellCoord& c) const {
        for (int a = 0; a < dim_; ++a)
            if (c[a] < 0 || c[a] >= extents_[std::size_t(a)]) return false;
        return true;
    }

    double center_coord(std::int64_t i, int axis) const {
        return origin_[std::size_t(axis)] + (double(i) + 0.5) * spacing_;
    }

    std::vector<double> cell_center(CellIndex idx) const {
        CellCoord c = decode(idx);
        std::vector<double> p(static_cast<std::size_t>(dim_));
        for (int a = 0; a < dim_; ++a) p[std::size_t(a)] = center_coord(c[a], a);
        return p;
    }

    Cube cell_cube(CellIndex idx) const { return Cube(cell_center(idx), 0.5 * spacing_); }

    /// Cell containing a point (points on cell boundaries round down).
    CellCoord cell_of_point(std::span<const double> x) const;

    /// Bounding box of the grid as a (possibly non-cubical) lo/hi pair.
    void bbox(std::vector<double>& lo, std::vector<double>& hi) const;

    /// True if all extents are equal and a power of two (dyadic window grid).
    bool is_dyadic_window() const;

    bool operator==(const GridSpec& o) const;

private:
    int dim_ = 0;
    std::vector<double> origin_;
    double spacing_ = 1.0;
    std::vector<std::int64_t> extents_;
    std::vector<std::int64_t> strides_;
    std::int64_t total_ = 0;
};

/// Window grid: cube-shaped, 2^level_count cells per axis, centered at
/// `center` with side `cells * spacing`.
GridSpec make_window_grid(std::span<const double> center, double spacing, std::int64_t cells_per_axis);

} // namespace sobex
