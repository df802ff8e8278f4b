#pragma once

#include <limits>
#include <vector>

#include "sobex/cube.hpp"
#include "sobex/field.hpp"

namespace sobex {

struct BestConstant {
    double c = 0.0;
    double error = 0.0; // attained L^p norm, midpoint quadrature
};

/// E^_1(u; region)_{L^p}: best constant approximation on a cell set.
/// p=1 weighted median, p=2 mean, p=inf midrange, otherwise golden-section
/// on the convex objective.
BestConstant best_constant(const ScalarField& u, const std::vector<CellIndex>& region, double p);

/// Brute-force oracle: scan `candidates` evenly spaced constants in
/// [min u, max u] and return the best. Test/bench use.
BestConstant best_constant_bruteforce(const ScalarField& u, const std::vector<CellIndex>& region,
                                      double p, int candidates);

/// Cells of the mask's A-set whose center lies in Q. A null mask in the
/// field means every grid cell counts.
std::vector<CellIndex> cells_in_cube(const GridSpec& grid, const DomainMask* mask, const Cube& q);

/// Cells of the A-set fully contained in Q (inner quadrature).
std::vector<CellIndex> cells_inside_cube(const GridSpec& grid, const DomainMask* mask, const Cube& q);

/// Lambda(u;Q)_{L^p(A)} = |Q|^{-1/p} inf_C ||u - C||_{L^p(Q cap A)};
/// |Q| is the full cube volume. Q cap A is realized by the cells fully
/// inside Q, so the discrete value approaches the continuum one from
/// below. Empty intersection gives 0.
double lambda(const ScalarField& u, const Cube& q, const DomainMask* mask, double p);

/// P_A(u): cell-measure mean over a region.
double mean_projection(const ScalarField& u, const std::vector<CellIndex>& region);

enum class SharpMethod { Auto, Exact, Histogram };

/// Dyadic radius ladder {h 2^j} reaching diam(A).
std::vector<double> dyadic_radii(const GridSpec& grid, double diam);

/// Sharp maximal field u^#_{1,A} on the closed cells of A:
/// max over the ladder of r^{-1} Lambda(u; Q(x,r))_{L^1(A)}.
/// Histogram method: two-tier sliding value histogram (2-D), exact medians
/// at the finest radii; Exact: direct median/SAD per query.
ScalarField sharp_maximal(const ScalarField& u, const DomainMask& mask,
                          const std::vector<double>& radii, SharpMethod method = SharpMethod::Auto);

struct SobolevReport {
    double p = 2.0;
    double lp_norm = 0.0;
    double grad_lp_norm = 0.0;  // sum over axes of ||d_a u||_p
    double w1p_norm = 0.0;      // lp_norm + grad_lp_norm
    double sharp_lp_norm = -1.0; // ||u^#_{1,A}||_p, -1 when not computed
    double c1p_norm = -1.0;      // lp_norm + sharp_lp_norm
};

/// Per-axis difference quotients: central where both axis neighbors are
/// open, one-sided at the frontier. Returns one field per axis.
std::vector<ScalarField> gradient_fields(const ScalarField& u, const DomainMask* mask);

SobolevReport sobolev_report(const ScalarField& u, const DomainMask* mask, double p,
                             bool with_sharp = false, SharpMethod method = SharpMethod::Auto);

} // namespace sobex
