#pragma once

#include <cstdint>
#include <vector>

#include "sobex/cube.hpp"
#include "sobex/mask.hpp"
#include "sobex/rng.hpp"

namespace sobex {

/// One measured |Q| / |Q cap A| record.
struct DensitySample {
    Cube cube;
    double ratio;
};

/// Measured Ahlfors-regularity data: C_A is the max ratio over all sampled
/// cubes with diam <= delta_A. Every ratio is >= 1 by construction.
struct AhlforsReport {
    double C_A = 1.0;
    double delta_A = 0.0;
    std::vector<DensitySample> samples; // capped subsample plus the maximizer
    /// max ratio restricted to diam <= delta (monotone in delta)
    double c_a_at(double delta) const;
};

/// Sample the measure-density condition |Q| <= C_A |Q cap A| over cubes
/// centered at closed cells, dyadic radii r in {h, 2h, ..., delta/2}.
/// sample_count <= 0 or >= |closed| means every closed cell.
AhlforsReport measure_density(const DomainMask& mask, double delta, std::int64_t sample_count,
                              Rng rng = Rng(1), std::size_t max_stored_samples = 4096);

struct QuasiconvexityWitness {
    std::vector<double> x, y;
    double geodesic_length;
    double straight_distance;
};

/// Measured local quasiconvexity: C_q = max over sampled pairs with
/// |x-y| < R of geodesic / Euclidean distance.
struct QuasiconvexityReport {
    double C_q = 1.0;
    double R = 0.0;
    std::vector<QuasiconvexityWitness> witness_pairs;
    std::int64_t pairs_tested = 0;
};

/// Random pairs of open-cell centers with Euclidean |x-y| < R; geodesics
/// through open-cell adjacency (2n + diagonal neighborhood, Euclidean
/// center-distance edge weights).
QuasiconvexityReport quasiconvexity(const DomainMask& mask, double R, std::int64_t pair_count,
                                    Rng rng = Rng(2), std::size_t max_stored_witnesses = 64);

/// Geodesic distance between two specific open cells (Dijkstra);
/// returns +inf if unreachable. Exposed for directed experiments.
double grid_geodesic(const DomainMask& mask, CellIndex from, CellIndex to);

/// Directed probe for slit-type geometry: axis-aligned open-cell pairs at
/// center distance <= gap_cells * h separated by non-open cells. Returns
/// the max geodesic/Euclidean ratio over up to max_pairs such pairs
/// (C_q = 1 when no blocked pair exists). Deterministic.
QuasiconvexityReport quasiconvexity_straddles(const DomainMask& mask, std::int64_t gap_cells = 5,
                                              std::int64_t max_pairs = 256);

} // namespace sobex
