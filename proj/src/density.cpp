#include "sobex/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "sobex/distance.hpp"
#include "sobex/errors.hpp"

namespace sobex {

double AhlforsReport::c_a_at(double delta) const {
    double c = 1.0;
    for (const auto& s : samples)
        if (s.cube.diam() <= delta) c = std::max(c, s.ratio);
    return c;
}

AhlforsReport measure_density(const DomainMask& mask, double delta, std::int64_t sample_count,
                              Rng rng, std::size_t max_stored_samples) {
    const GridSpec& grid = mask.grid();
    const double h = grid.spacing();
    const int n = grid.dim();
    if (delta < 2.0 * h) throw std::invalid_argument("measure_density: delta must be >= 2h");
    if (mask.closed_cells().empty()) throw empty_domain_error("measure_density: empty closed set");

    // dyadic radii r = h * 2^j with 2r <= delta
    std::vector<std::int64_t> radii_cells;
    for (std::int64_t rc = 1; 2.0 * double(rc) * h <= delta + 1e-12 * h; rc *= 2)
        radii_cells.push_back(rc);

    const auto& closed = mask.closed_cells();
    std::vector<CellIndex> centers;
    if (sample_count <= 0 || sample_count >= std::int64_t(closed.size())) {
        centers = closed;
    } else {
        centers.reserve(std::size_t(sample_count));
        for (std::int64_t k = 0; k < sample_count; ++k)
            centers.push_back(closed[std::size_t(rng.next_below(closed.size()))]);
    }

    BoxCounter counter(grid, mask.state(), 1);

    AhlforsReport report;
    report.delta_A = delta;
    double best = 1.0;
    Cube best_cube;
    const std::size_t stride = std::max<std::size_t>(1, centers.size() * radii_cells.size() / max_stored_samples);
    std::size_t k = 0;
    for (CellIndex ci : centers) {
        CellCoord c = grid.decode(ci);
        for (std::int64_t rc : radii_cells) {
            // cube cell count on the infinite lattice: (2 rc + 1)^n
            double full = 1.0;
            for (int a = 0; a < n; ++a) full *= double(2 * rc + 1);
            CellCoord lo = c, hi = c;
            for (int a = 0; a < n; ++a) {
                lo[a] -= rc;
                hi[a] += rc;
            }
            std::int64_t inter = counter.count(lo, hi);
            if (inter <= 0)
                throw invariant_violation("measure_density: degenerate cube with |Q cap A| = 0");
            double ratio = full / double(inter);
            Cube q(grid.cell_center(ci), double(rc) * h);
            if (ratio > best) {
                best = ratio;
                best_cube = q;
            }
            if (k++ % stride == 0 && report.samples.size() < max_stored_samples)
                report.samples.push_back({q, ratio});
        }
    }
    report.C_A = best;
    if (best > 1.0) report.samples.push_back({best_cube, best});
    return report;
}

namespace {

struct NeighborTable {
    std::vector<std::int64_t> offsets; // linear index offsets
    std::vector<double> weights;       // Euclidean center distances
    std::vector<CellCoord> deltas;
};

NeighborTable build_neighbors(const GridSpec& grid) {
    NeighborTable t;
    const int n = grid.dim();
    std::array<int, kMaxDim> d{};
    for (int a = 0; a < n; ++a) d[std::size_t(a)] = -1;
    while (true) {
        bool all_zero = true;
        double w2 = 0.0;
        std::int64_t off = 0;
        CellCoord dc;
        dc.dim = n;
        for (int a = 0; a < n; ++a) {
            if (d[std::size_t(a)] != 0) all_zero = false;
            w2 += double(d[std::size_t(a)] * d[std::size_t(a)]);
            off += std::int64_t(d[std::size_t(a)]) * grid.stride(a);
            dc[a] = d[std::size_t(a)];
        }
        if (!all_zero) {
            t.offsets.push_back(off);
            t.weights.push_back(std::sqrt(w2) * grid.spacing());
            t.deltas.push_back(dc);
        }
        int a = 0;
        for (; a < n; ++a) {
            if (++d[std::size_t(a)] <= 1) break;
            d[std::size_t(a)] = -1;
        }
        if (a == n) break;
    }
    return t;
}

double dijkstra(const DomainMask& mask, const NeighborTable& nbt, CellIndex from, CellIndex to,
                std::vector<double>& dist, std::vector<std::int64_t>& touched) {
    const GridSpec& grid = mask.grid();
    for (std::int64_t i : touched) dist[std::size_t(i)] = std::numeric_limits<double>::infinity();
    touched.clear();
    using Item = std::pair<double, CellIndex>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[std::size_t(from)] = 0.0;
    touched.push_back(from);
    pq.push({0.0, from});
    while (!pq.empty()) {
        auto [d, cur] = pq.top();
        pq.pop();
        if (d > dist[std::size_t(cur)]) continue;
        if (cur == to) return d;
        CellCoord cc = grid.decode(cur);
        for (std::size_t k = 0; k < nbt.offsets.size(); ++k) {
            CellCoord nb = cc;
            bool ok = true;
            for (int a = 0; a < grid.dim(); ++a) {
                nb[a] += nbt.deltas[k][a];
                if (nb[a] < 0 || nb[a] >= grid.extent(a)) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            CellIndex ni = cur + nbt.offsets[k];
            if (!mask.is_open(ni)) continue;
            double nd = d + nbt.weights[k];
            if (nd < dist[std::size_t(ni)]) {
                if (dist[std::size_t(ni)] == std::numeric_limits<double>::infinity())
                    touched.push_back(ni);
                dist[std::size_t(ni)] = nd;
                pq.push({nd, ni});
            }
        }
    }
    return std::numeric_limits<double>::infinity();
}

} // namespace

double grid_geodesic(const DomainMask& mask, CellIndex from, CellIndex to) {
    if (!mask.is_open(from) || !mask.is_open(to))
        throw std::invalid_argument("grid_geodesic: endpoints must be open cells");
    NeighborTable nbt = build_neighbors(mask.grid());
    std::vector<double> dist(std::size_t(mask.grid().total_cells()),
                             std::numeric_limits<double>::infinity());
    std::vector<std::int64_t> touched;
    return dijkstra(mask, nbt, from, to, dist, touched);
}

QuasiconvexityReport quasiconvexity_straddles(const DomainMask& mask, std::int64_t gap_cells,
                                              std::int64_t max_pairs) {
    const GridSpec& grid = mask.grid();
    const int n = grid.dim();
    const double h = grid.spacing();
    std::vector<std::pair<CellIndex, CellIndex>> pairs;
    for (CellIndex i : mask.open_cells()) {
        CellCoord c = grid.decode(i);
        for (int a = 0; a < n; ++a) {
            for (std::int64_t k = 2; k <= gap_cells; ++k) {
                CellCoord far = c;
                far[a] += k;
                if (!grid.in_bounds(far)) break;
                CellIndex fi = grid.linear(far);
                if (!mask.is_open(fi)) continue;
                bool blocked = false;
                for (std::int64_t j = 1; j < k; ++j) {
                    CellCoord mid = c;
                    mid[a] += j;
                    if (!mask.is_open(grid.linear(mid))) blocked = true;
                }
                if (blocked) {
                    pairs.push_back({i, fi});
                    break; // nearest blocked partner along this axis suffices
                }
            }
        }
    }
    QuasiconvexityReport report;
    report.R = double(gap_cells) * h;
    if (pairs.empty()) return report;
    const std::size_t stride = std::max<std::size_t>(1, pairs.size() / std::size_t(max_pairs));
    NeighborTable nbt = build_neighbors(grid);
    std::vector<double> dist(static_cast<std::size_t>(grid.total_cells()),
                             std::numeric_limits<double>::infinity());
    std::vector<std::int64_t> touched;
    for (std::size_t k = 0; k < pairs.size(); k += stride) {
        auto [a, b] = pairs[k];
        CellCoord ca = grid.decode(a), cb = grid.decode(b);
        double straight = 0.0;
        for (int ax = 0; ax < n; ++ax) {
            double d = double(cb[ax] - ca[ax]) * h;
            straight += d * d;
        }
        straight = std::sqrt(straight);
        double geo = dijkstra(mask, nbt, a, b, dist, touched);
        if (!std::isfinite(geo)) continue; // different components; not a curve
        double ratio = geo / straight;
        if (ratio > report.C_q) {
            report.C_q = ratio;
            if (report.witness_pairs.empty()) report.witness_pairs.resize(1);
            report.witness_pairs[0] = {grid.cell_center(a), grid.cell_center(b), geo, straight};
        }
        ++report.pairs_tested;
    }
    return report;
}

QuasiconvexityReport quasiconvexity(const DomainMask& mask, double R, std::int64_t pair_count,
                                    Rng rng, std::size_t max_stored_witnesses) {
    const GridSpec& grid = mask.grid();
    const double h = grid.spacing();
    const int n = grid.dim();
    if (R <= 2.0 * h) throw std::invalid_argument("quasiconvexity: R must exceed 2h");
    if (mask.open_cells().empty()) throw empty_domain_error("quasiconvexity: no open cells");

    int comp_count = 0;
    std::vector<std::int32_t> comp = mask.open_components(comp_count);
    // restrict pairs to the largest component when disconnected
    std::int32_t main_comp = 0;
    if (comp_count > 1) {
        std::vector<std::int64_t> sizes(std::size_t(comp_count), 0);
        for (CellIndex i : mask.open_cells()) sizes[std::size_t(comp[std::size_t(i)])]++;
        main_comp = std::int32_t(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    }
    std::vector<CellIndex> pool;
    for (CellIndex i : mask.open_cells())
        if (comp[std::size_t(i)] == main_comp) pool.push_back(i);

    NeighborTable nbt = build_neighbors(grid);
    std::vector<double> dist(static_cast<std::size_t>(grid.total_cells()), std::numeric_limits<double>::infinity());
    std::vector<std::int64_t> touched;

    QuasiconvexityReport report;
    report.R = R;
    const std::int64_t box = std::int64_t(std::ceil(R / h)) + 1;
    std::int64_t done = 0, attempts = 0;
    while (done < pair_count && attempts < pair_count * 64) {
        ++attempts;
        CellIndex a = pool[std::size_t(rng.next_below(pool.size()))];
        CellCoord ca = grid.decode(a);
        CellCoord cb = ca;
        for (int ax = 0; ax < n; ++ax)
            cb[ax] = ca[ax] + std::int64_t(rng.next_below(std::uint64_t(2 * box + 1))) - box;
        if (!grid.in_bounds(cb)) continue;
        CellIndex b = grid.linear(cb);
        if (b == a || !mask.is_open(b) || comp[std::size_t(b)] != main_comp) continue;
        double straight = 0.0;
        for (int ax = 0; ax < n; ++ax) {
            double d = double(cb[ax] - ca[ax]) * h;
            straight += d * d;
        }
        straight = std::sqrt(straight);
        if (straight >= R) continue;
        double geo = dijkstra(mask, nbt, a, b, dist, touched);
        if (!std::isfinite(geo))
            throw connectivity_error("quasiconvexity: unreachable pair inside one component");
        double ratio = geo / straight;
        if (ratio > report.C_q || report.witness_pairs.size() < max_stored_witnesses) {
            if (report.witness_pairs.size() >= max_stored_witnesses) {
                // keep the maximizer in the last slot
                report.witness_pairs.back() = {grid.cell_center(a), grid.cell_center(b), geo, straight};
            } else {
                report.witness_pairs.push_back({grid.cell_center(a), grid.cell_center(b), geo, straight});
            }
        }
        report.C_q = std::max(report.C_q, ratio);
        ++done;
    }
    report.pairs_tested = done;
    return report;
}

} // namespace sobex
