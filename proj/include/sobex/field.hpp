#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sobex/mask.hpp"

namespace sobex {

/// Samples of a function at cell centers. Values are stored for every grid
/// cell; the mask (optional) declares where they are meaningful. A null
/// mask means the whole window.
struct ScalarField {
    GridSpec grid;
    std::vector<double> values;
    std::shared_ptr<const DomainMask> mask; // may be null

    ScalarField() = default;
    ScalarField(GridSpec g, std::shared_ptr<const DomainMask> m = nullptr)
        : grid(std::move(g)), values(std::size_t(grid.total_cells()), 0.0), mask(std::move(m)) {}

    double cell_measure() const { return std::pow(grid.spacing(), grid.dim()); }

    double& operator[](CellIndex i) { return values[std::size_t(i)]; }
    double operator[](CellIndex i) const { return values[std::size_t(i)]; }
};

/// L^p norm over an explicit cell set with midpoint quadrature
/// (max over cells for p = infinity).
double p_norm(const ScalarField& u, const std::vector<CellIndex>& cells, double p);

// --- SOBEXFLD binary format ---
void write_field(const ScalarField& u, const std::string& path);
ScalarField read_field(const std::string& path);
void write_field_csv(const ScalarField& u, const std::string& path);

/// Product variant: header carries dim = n + m plus a u32 split index
/// recording n right after the spacing.
void write_product_field(const std::vector<double>& values, const GridSpec& gx, const GridSpec& gy,
                         const std::string& path);
struct ProductFieldRaw {
    GridSpec gx, gy;
    std::vector<double> values;
};
ProductFieldRaw read_product_field(const std::string& path);

} // namespace sobex
