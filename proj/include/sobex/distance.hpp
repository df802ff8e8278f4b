#pragma once

#include <cstdint>
#include <vector>

#include "sobex/mask.hpp"

namespace sobex {

constexpr std::int32_t kDistInf = INT32_MAX / 4;

/// Chebyshev distance transform: for every cell, the max-metric distance
/// (in cell units) from its center to the nearest closed-cell center.
/// 0 on closed cells. Exact; separable per-axis lower-envelope scans.
std::vector<std::int32_t> chebyshev_dt(const DomainMask& mask);

/// Brute-force reference, O(cells * closed). Test/bench use only.
std::vector<std::int32_t> chebyshev_dt_reference(const DomainMask& mask);

/// Region distance in grid units between a cell and the closed set:
/// (dt - 1) * h clamped at 0 converts center distance to set distance
/// for cell-aligned regions.
inline double cell_region_dist(std::int32_t dt_cells, double h) {
    return dt_cells <= 1 ? 0.0 : double(dt_cells - 1) * h;
}

/// Inclusion-exclusion box counter over an indicator grid; O(2^n) per query.
class BoxCounter {
public:
    BoxCounter(const GridSpec& grid, const std::vector<std::uint8_t>& state, std::uint8_t min_state);

    /// Number of counted cells with per-axis index in [lo, hi] (clamped to
    /// the grid; out-of-grid parts contribute zero).
    std::int64_t count(const CellCoord& lo, const CellCoord& hi) const;

private:
    const GridSpec* grid_;
    std::vector<std::int64_t> prefix_; // over (extent+1) per axis
    std::vector<std::int64_t> pext_;
    std::vector<std::int64_t> pstride_;
    std::int64_t at(const CellCoord& c) const;
};

} // namespace sobex
