#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "sobex/cube.hpp"
#include "sobex/distance.hpp"
#include "sobex/mask.hpp"

namespace sobex {

/// One dyadic Whitney cube. Geometry is integer-backed: the cube occupies
/// cells [cell_lo, cell_lo + width) per axis, so its center lies at
/// 2*cell_lo + width in half-cell units. diam = width * h (uniform norm).
struct WhitneyCube {
    int level = 0;
    std::array<std::int64_t, kMaxDim> cell_lo{};
    std::int64_t width = 0;     // cells per axis
    std::int32_t min_dt = 0;    // min Chebyshev DT over the cube's cells
    bool frontier = false;      // accepted at max_level without the lower bound
    bool window_edge = false;   // touches the window boundary
    bool forced_parent = false; // parent split only because of min_level
    std::vector<std::int32_t> neighbors; // K with Q* cap K* nonempty, K != Q
};

struct WhitneyCertification {
    std::int64_t cube_count = 0;
    std::int64_t frontier_count = 0;
    std::int64_t window_edge_count = 0;
    std::int64_t uncovered_count = 0;
    // Theorem: diam Q <= dist(Q,S) <= 4 diam Q on non-frontier cubes
    std::int64_t lower_bound_failures = 0;
    std::int64_t upper_bound_failures = 0;
    // adjacent diam ratios within [1/4, 4]
    std::int64_t adjacency_ratio_failures = 0;
    int point_overlap_N = 0; // max cubes sharing a point (corner sweep)
    int star_overlap_N = 0;  // max |{Q : Q* cap K* != 0}| including K
    bool partition_identity = false; // covered + uncovered + S == window, exact
    bool margin_ok = false;          // window margin >= 5 diam S
    bool passed() const {
        return lower_bound_failures == 0 && upper_bound_failures == 0 &&
               adjacency_ratio_failures == 0 && partition_identity;
    }
};

/// Whitney family W_S of window \ S in the uniform norm. Immutable after
/// construction; all queries are pure.
class WhitneyFamily {
public:
    static WhitneyFamily decompose(std::shared_ptr<const DomainMask> mask, const Cube& window,
                                   int min_level, int max_level);

    const DomainMask& mask() const { return *mask_; }
    std::shared_ptr<const DomainMask> mask_ptr() const { return mask_; }
    const Cube& window() const { return window_; }
    const std::vector<WhitneyCube>& cubes() const { return cubes_; }
    const WhitneyCube& cube(std::int32_t id) const { return cubes_[std::size_t(id)]; }
    const std::vector<CellIndex>& uncovered_cells() const { return uncovered_; }
    const std::vector<std::int32_t>& dt() const { return *dt_; }
    std::shared_ptr<const std::vector<std::int32_t>> dt_ptr() const { return dt_; }
    const WhitneyCertification& certification() const { return cert_; }
    int max_level() const { return max_level_; }
    int min_level() const { return min_level_; }

    double spacing() const { return mask_->grid().spacing(); }
    double cube_half_side(std::int32_t id) const { return 0.5 * double(cube(id).width) * spacing(); }
    double cube_diam(std::int32_t id) const { return double(cube(id).width) * spacing(); }
    /// Exact uniform-norm distance from the cube to S (cell-region model).
    double cube_dist_to_S(std::int32_t id) const {
        return cell_region_dist(cube(id).min_dt, spacing());
    }
    Cube cube_geometry(std::int32_t id) const;
    std::vector<double> cube_center(std::int32_t id) const;

    /// All cubes whose Q* = (9/8)Q contains x. Throws in_set_error when the
    /// cell holding x is closed, std::invalid_argument outside the window.
    std::vector<std::int32_t> locate(std::span<const double> x) const;

    /// Cube id at (level, block) or -1.
    std::int32_t cube_at(int level, std::int64_t block_linear) const;
    std::int64_t blocks_per_axis(int level) const { return std::int64_t(1) << level; }
    std::int64_t block_width(int level) const { return extent_ >> level; }
    std::int64_t extent() const { return extent_; }
    std::int64_t block_linear(int level, const CellCoord& block) const;

    bool cell_is_covered(CellIndex cell) const; // inside some accepted cube

    /// One JSON object per cube: {id, center, half_side, level, dist_to_S,
    /// frontier, neighbor_ids}.
    void dump_jsonl(const std::string& path) const;

private:
    std::shared_ptr<const DomainMask> mask_;
    std::shared_ptr<const std::vector<std::int32_t>> dt_;
    Cube window_;
    int min_level_ = 0, max_level_ = 0;
    std::int64_t extent_ = 0; // cells per axis
    std::vector<WhitneyCube> cubes_;
    std::vector<CellIndex> uncovered_; // sorted
    std::vector<std::vector<std::int32_t>> level_map_;
    WhitneyCertification cert_;

    void build_adjacency();
    void certify();
};

} // namespace sobex
