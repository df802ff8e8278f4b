#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "sobex/grid.hpp"

namespace sobex {

enum class CellState : std::uint8_t {
    Outside = 0,
    Layer = 1, // boundary layer: closed \ open
    Open = 2,
};

/// Rasterized domain: open cells are those whose center lies in the open
/// set Omega; closed cells are the open cells plus one layer of grid
/// neighbors (the discrete closure S). The layer has measure ~h * |bdry|,
/// vanishing under refinement.
class DomainMask {
public:
    DomainMask(GridSpec grid, std::vector<std::uint8_t> state);

    const GridSpec& grid() const { return grid_; }
    const std::vector<std::uint8_t>& state() const { return state_; }

    bool is_open(CellIndex i) const { return state_[std::size_t(i)] == 2; }
    bool is_closed(CellIndex i) const { return state_[std::size_t(i)] >= 1; }

    const std::vector<CellIndex>& open_cells() const { return open_cells_; }
    const std::vector<CellIndex>& closed_cells() const { return closed_cells_; }

    std::int64_t open_count() const { return std::int64_t(open_cells_.size()); }
    std::int64_t closed_count() const { return std::int64_t(closed_cells_.size()); }

    /// |Omega| and |S| by exact cell counting.
    double open_measure() const;
    double closed_measure() const;

    /// Uniform-norm diameter of the closed set (from its cell bounding box).
    double closed_diam() const;
    std::vector<double> closed_bbox_center() const;

    /// Connected components of the open cells under the 2n+diagonal
    /// neighborhood; returns component id per cell (-1 outside), sets count.
    std::vector<std::int32_t> open_components(int& count) const;

    /// FNV-1a over the state bytes; identifies the domain in reports.
    std::uint64_t content_hash() const;

private:
    GridSpec grid_;
    std::vector<std::uint8_t> state_;
    std::vector<CellIndex> open_cells_;
    std::vector<CellIndex> closed_cells_;
};

/// Constructive-geometry shape description (JSON). Primitives: box, ball,
/// halfplane, polygon (2-D). Operators: union, intersection, difference.
class ShapeExpr {
public:
    virtual ~ShapeExpr() = default;
    virtual bool contains_open(std::span<const double> x) const = 0;
    virtual bool contains_closed(std::span<const double> x) const = 0;
    virtual void bounding_box(std::vector<double>& lo, std::vector<double>& hi) const = 0;
};

std::shared_ptr<const ShapeExpr> parse_shape_json(const std::string& json_text);
std::shared_ptr<const ShapeExpr> load_shape_file(const std::string& path);

/// Rasterize by cell-center membership. Throws empty_domain_error if no
/// cell center lands in the open set.
DomainMask rasterize(const ShapeExpr& shape, const GridSpec& grid);

// --- binary mask format (SOBEXMSK) and PGM export ---
void write_mask(const DomainMask& mask, const std::string& path);
DomainMask read_mask(const std::string& path);
void write_mask_pgm(const DomainMask& mask, const std::string& path);

} // namespace sobex
