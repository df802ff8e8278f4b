#include "sobex/whitney.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "sobex/errors.hpp"

namespace sobex {

namespace {

int int_log2(std::int64_t v) {
    int l = 0;
    while ((std::int64_t(1) << (l + 1)) <= v) ++l;
    return l;
}

} // namespace

Cube WhitneyFamily::cube_geometry(std::int32_t id) const {
    return Cube(cube_center(id), cube_half_side(id));
}

std::vector<double> WhitneyFamily::cube_center(std::int32_t id) const {
    const WhitneyCube& q = cube(id);
    const GridSpec& g = mask_->grid();
    std::vector<double> c(static_cast<std::size_t>(g.dim()));
    for (int a = 0; a < g.dim(); ++a)
        c[std::size_t(a)] = g.origin()[std::size_t(a)] +
                            (double(q.cell_lo[std::size_t(a)]) + 0.5 * double(q.width)) * g.spacing();
    return c;
}

std::int64_t WhitneyFamily::block_linear(int level, const CellCoord& block) const {
    const std::int64_t bpa = blocks_per_axis(level);
    std::int64_t idx = 0;
    for (int a = 0; a < mask_->grid().dim(); ++a) idx = idx * bpa + block[a];
    return idx;
}

std::int32_t WhitneyFamily::cube_at(int level, std::int64_t block_linear_idx) const {
    const auto& m = level_map_[std::size_t(level)];
    if (block_linear_idx < 0 || block_linear_idx >= std::int64_t(m.size())) return -1;
    return m[std::size_t(block_linear_idx)];
}

bool WhitneyFamily::cell_is_covered(CellIndex cell) const {
    if (mask_->is_closed(cell)) return false;
    return !std::binary_search(uncovered_.begin(), uncovered_.end(), cell);
}

WhitneyFamily WhitneyFamily::decompose(std::shared_ptr<const DomainMask> mask, const Cube& window,
                                       int min_level, int max_level) {
    const GridSpec& grid = mask->grid();
    const int n = grid.dim();
    if (!grid.is_dyadic_window())
        throw std::invalid_argument("decompose: grid must be a square power-of-two window");
    const std::int64_t E = grid.extent(0);
    const double h = grid.spacing();

    // window must coincide with the grid's bounding box
    std::vector<double> lo, hi;
    grid.bbox(lo, hi);
    for (int a = 0; a < n; ++a) {
        if (std::abs(window.lo(a) - lo[std::size_t(a)]) > 1e-9 * h ||
            std::abs(window.hi(a) - hi[std::size_t(a)]) > 1e-9 * h)
            throw std::invalid_argument("decompose: window must equal the mask grid's bounding box");
    }

    const int L = int_log2(E);
    if (max_level < 0 || max_level > L - 1)
        throw std::invalid_argument("decompose: max_level must keep cube side >= 2h");
    if (min_level < 0 || min_level > max_level)
        throw std::invalid_argument("decompose: need 0 <= min_level <= max_level");
    if (mask->closed_cells().empty()) throw empty_domain_error("decompose: S is empty");

    WhitneyFamily fam;
    fam.mask_ = mask;
    fam.window_ = window;
    fam.min_level_ = min_level;
    fam.max_level_ = max_level;
    fam.extent_ = E;
    fam.dt_ = std::make_shared<const std::vector<std::int32_t>>(chebyshev_dt(*mask));
    const auto& dt = *fam.dt_;

    // min-DT pyramid: pyr[k] holds minima over blocks of 2^k cells per axis
    std::vector<std::vector<std::int32_t>> pyr(static_cast<std::size_t>(L + 1));
    pyr[0] = dt;
    for (int k = 1; k <= L; ++k) {
        const std::int64_t bpa = E >> k;       // blocks per axis at this tier
        const std::int64_t cpa = E >> (k - 1); // child blocks per axis
        std::int64_t count = 1;
        for (int a = 0; a < n; ++a) count *= bpa;
        pyr[std::size_t(k)].assign(std::size_t(count), kDistInf);
        auto& cur = pyr[std::size_t(k)];
        const auto& child = pyr[std::size_t(k - 1)];
#pragma omp parallel for schedule(static)
        for (std::int64_t b = 0; b < count; ++b) {
            // decode block in row-major over n axes
            std::array<std::int64_t, kMaxDim> bc{};
            std::int64_t rem = b;
            for (int a = n - 1; a >= 0; --a) {
                bc[std::size_t(a)] = rem % bpa;
                rem /= bpa;
            }
            std::int32_t m = kDistInf;
            for (int corner = 0; corner < (1 << n); ++corner) {
                std::int64_t ci = 0;
                for (int a = 0; a < n; ++a) {
                    std::int64_t cc = 2 * bc[std::size_t(a)] + ((corner >> a) & 1);
                    ci = ci * cpa + cc;
                }
                m = std::min(m, child[std::size_t(ci)]);
            }
            cur[std::size_t(b)] = m;
        }
    }
    auto pyr_min = [&](int level, std::int64_t block) -> std::int32_t {
        return pyr[std::size_t(L - level)][std::size_t(block)];
    };

    // Top-down selection: accept a cube when diam Q <= dist(Q,S), i.e.
    // (min_dt - 1) >= width in cell units; split otherwise. An accepted
    // cube's parent violated the lower bound, which forces
    // dist(Q,S) <= dist(P,S) + diam P < 2 diam P = 4 diam Q.
    struct Node {
        std::int64_t block;
        bool forced_parent;
    };
    std::vector<Node> current{{0, false}};
    std::vector<Node> next;
    fam.level_map_.assign(std::size_t(max_level + 1), {});

    for (int level = 0; level <= max_level && !current.empty(); ++level) {
        const std::int64_t bpa = std::int64_t(1) << level;
        const std::int64_t w = E >> level;
        fam.level_map_[std::size_t(level)].assign(std::size_t([&] {
                                                      std::int64_t c = 1;
                                                      for (int a = 0; a < n; ++a) c *= bpa;
                                                      return c;
                                                  }()),
                                                  -1);
        next.clear();
        for (const Node& node : current) {
            const std::int32_t m = pyr_min(level, node.block);
            const bool bound_ok = m != 0 && std::int64_t(m) - 1 >= w;
            const bool may_accept = level >= min_level;
            if (bound_ok && may_accept) {
                WhitneyCube q;
                q.level = level;
                q.width = w;
                q.min_dt = m;
                q.forced_parent = node.forced_parent;
                std::int64_t rem = node.block;
                for (int a = n - 1; a >= 0; --a) {
                    q.cell_lo[std::size_t(a)] = (rem % bpa) * w;
                    rem /= bpa;
                }
                for (int a = 0; a < n; ++a)
                    if (q.cell_lo[std::size_t(a)] == 0 || q.cell_lo[std::size_t(a)] + w == E)
                        q.window_edge = true;
                fam.level_map_[std::size_t(level)][std::size_t(node.block)] =
                    std::int32_t(fam.cubes_.size());
                fam.cubes_.push_back(std::move(q));
                continue;
            }
            if (level == max_level) {
                if (m == 0) {
                    // mixed block: its complement cells stay uncovered
                    std::array<std::int64_t, kMaxDim> blo{};
                    std::int64_t rem = node.block;
                    for (int a = n - 1; a >= 0; --a) {
                        blo[std::size_t(a)] = (rem % bpa) * w;
                        rem /= bpa;
                    }
                    CellCoord c;
                    c.dim = n;
                    std::array<std::int64_t, kMaxDim> off{};
                    bool done = false;
                    while (!done) {
                        for (int a = 0; a < n; ++a) c[a] = blo[std::size_t(a)] + off[std::size_t(a)];
                        CellIndex ci = grid.linear(c);
                        if (!mask->is_closed(ci)) fam.uncovered_.push_back(ci);
                        int a = 0;
                        for (; a < n; ++a) {
                            if (++off[std::size_t(a)] < w) break;
                            off[std::size_t(a)] = 0;
                        }
                        done = (a == n);
                    }
                } else {
                    // pure complement block violating the lower bound
                    WhitneyCube q;
                    q.level = level;
                    q.width = w;
                    q.min_dt = m;
                    q.frontier = true;
                    q.forced_parent = node.forced_parent;
                    std::int64_t rem = node.block;
                    for (int a = n - 1; a >= 0; --a) {
                        q.cell_lo[std::size_t(a)] = (rem % bpa) * w;
                        rem /= bpa;
                    }
                    for (int a = 0; a < n; ++a)
                        if (q.cell_lo[std::size_t(a)] == 0 || q.cell_lo[std::size_t(a)] + w == E)
                            q.window_edge = true;
                    fam.level_map_[std::size_t(level)][std::size_t(node.block)] =
                        std::int32_t(fam.cubes_.size());
                    fam.cubes_.push_back(std::move(q));
                }
                continue;
            }
            // split into 2^n children
            const bool forced = bound_ok && !may_accept;
            for (int child = 0; child < (1 << n); ++child) {
                std::array<std::int64_t, kMaxDim> bc{};
                std::int64_t rem = node.block;
                for (int a = n - 1; a >= 0; --a) {
                    bc[std::size_t(a)] = rem % bpa;
                    rem /= bpa;
                }
                std::int64_t cb = 0;
                for (int a = 0; a < n; ++a)
                    cb = cb * (bpa * 2) + (2 * bc[std::size_t(a)] + ((child >> a) & 1));
                next.push_back({cb, forced});
            }
        }
        std::swap(current, next);
    }

    std::sort(fam.uncovered_.begin(), fam.uncovered_.end());

    // A max_level coarser than the finest legal tier, combined with any
    // frontier cube or uncovered cell, means finer cubes were available but
    // forbidden: report resolution exhaustion.
    bool has_frontier = false;
    for (const auto& q : fam.cubes_) has_frontier |= q.frontier;
    if (max_level < L - 1 && (has_frontier || !fam.uncovered_.empty())) {
        std::vector<std::int64_t> cells = fam.uncovered_;
        for (const auto& q : fam.cubes_) {
            if (!q.frontier) continue;
            CellCoord c;
            c.dim = n;
            for (int a = 0; a < n; ++a) c[a] = q.cell_lo[std::size_t(a)];
            cells.push_back(grid.linear(c));
        }
        throw resolution_exhausted_error(
            "decompose: max_level too coarse to separate cubes from S", std::move(cells));
    }

    fam.build_adjacency();
    fam.certify();
    return fam;
}

void WhitneyFamily::build_adjacency() {
    const int n = mask_->grid().dim();
    const double h = spacing();
    (void)h;
    // Search only coarser-or-equal levels per cube, then symmetrize. The
    // candidate index box at a coarser level has O(1) width because Q* is
    // small relative to those blocks.
    const std::int64_t count = std::int64_t(cubes_.size());
    for (std::int32_t id = 0; id < count; ++id) {
        WhitneyCube& q = cubes_[std::size_t(id)];
        // center and half-width in half-cell units
        std::array<std::int64_t, kMaxDim> cq{};
        for (int a = 0; a < n; ++a) cq[std::size_t(a)] = 2 * q.cell_lo[std::size_t(a)] + q.width;
        for (int level = min_level_; level <= q.level; ++level) {
            if (level_map_[std::size_t(level)].empty()) continue;
            const std::int64_t wK = extent_ >> level;
            const std::int64_t bpa = std::int64_t(1) << level;
            // candidate blocks whose center is within (9/8)(rQ + rK) of cQ:
            // in half-cells |ck - cq| <= 9(wQ + wK)/8
            std::array<std::int64_t, kMaxDim> blo{}, bhi{};
            for (int a = 0; a < n; ++a) {
                const std::int64_t bound = (9 * (q.width + wK)) / 8 + 1;
                // block center in half-cells: 2*b*wK + wK
                std::int64_t lo = (cq[std::size_t(a)] - bound - wK) / (2 * wK) - 1;
                std::int64_t hi = (cq[std::size_t(a)] + bound - wK) / (2 * wK) + 1;
                blo[std::size_t(a)] = std::max<std::int64_t>(lo, 0);
                bhi[std::size_t(a)] = std::min<std::int64_t>(hi, bpa - 1);
            }
            CellCoord b;
            b.dim = n;
            std::array<std::int64_t, kMaxDim> it{};
            for (int a = 0; a < n; ++a) it[std::size_t(a)] = blo[std::size_t(a)];
            while (true) {
                for (int a = 0; a < n; ++a) b[a] = it[std::size_t(a)];
                std::int32_t other = cube_at(level, block_linear(level, b));
                if (other >= 0 && other != id) {
                    const WhitneyCube& k = cubes_[std::size_t(other)];
                    bool hit = true;
                    for (int a = 0; a < n; ++a) {
                        std::int64_t ck = 2 * k.cell_lo[std::size_t(a)] + k.width;
                        std::int64_t dd = std::abs(ck - cq[std::size_t(a)]);
                        if (8 * dd > 9 * (q.width + k.width)) {
                            hit = false;
                            break;
                        }
                    }
                    if (hit) {
                        q.neighbors.push_back(other);
                        cubes_[std::size_t(other)].neighbors.push_back(id);
                    }
                }
                int a = 0;
                for (; a < n; ++a) {
                    if (++it[std::size_t(a)] <= bhi[std::size_t(a)]) break;
                    it[std::size_t(a)] = blo[std::size_t(a)];
                }
                if (a == n) break;
            }
        }
    }
    for (auto& q : cubes_) {
        std::sort(q.neighbors.begin(), q.neighbors.end());
        q.neighbors.erase(std::unique(q.neighbors.begin(), q.neighbors.end()), q.neighbors.end());
    }
}

void WhitneyFamily::certify() {
    const GridSpec& grid = mask_->grid();
    const int n = grid.dim();
    const auto& dt = *dt_;
    WhitneyCertification c;
    c.cube_count = std::int64_t(cubes_.size());
    c.uncovered_count = std::int64_t(uncovered_.size());

    // margin check: window margin >= 5 diam S
    {
        const double dS = mask_->closed_diam();
        auto ctr = mask_->closed_bbox_center();
        double margin = window_.half_side;
        for (int a = 0; a < n; ++a) {
            double lo_gap = (ctr[std::size_t(a)] - 0.5 * dS) - window_.lo(a);
            double hi_gap = window_.hi(a) - (ctr[std::size_t(a)] + 0.5 * dS);
            margin = std::min({margin, lo_gap, hi_gap});
        }
        c.margin_ok = margin + 1e-9 >= 5.0 * dS;
    }

    std::int64_t covered_cells = 0;
    const std::int64_t count = std::int64_t(cubes_.size());
    std::int64_t lower_fail = 0, upper_fail = 0, frontier_count = 0, edge_count = 0;
    std::int64_t pyramid_mismatch = 0;
#pragma omp parallel for schedule(dynamic, 64) \
    reduction(+ : covered_cells, lower_fail, upper_fail, frontier_count, edge_count, pyramid_mismatch)
    for (std::int32_t id = 0; id < count; ++id) {
        const WhitneyCube& q = cubes_[std::size_t(id)];
        if (q.frontier) ++frontier_count;
        if (q.window_edge) ++edge_count;
        std::int64_t vol = 1;
        for (int a = 0; a < n; ++a) vol *= q.width;
        covered_cells += vol;

        // independent recheck of min DT by direct scan
        std::int32_t m = kDistInf;
        CellCoord cc;
        cc.dim = n;
        std::array<std::int64_t, kMaxDim> off{};
        while (true) {
            for (int a = 0; a < n; ++a) cc[a] = q.cell_lo[std::size_t(a)] + off[std::size_t(a)];
            m = std::min(m, dt[std::size_t(grid.linear(cc))]);
            int a = 0;
            for (; a < n; ++a) {
                if (++off[std::size_t(a)] < q.width) break;
                off[std::size_t(a)] = 0;
            }
            if (a == n) break;
        }
        if (m != q.min_dt) ++pyramid_mismatch;
        const std::int64_t dist_cells = std::int64_t(m) - 1;
        if (!q.frontier && dist_cells < q.width) ++lower_fail;
        // upper bound holds for frontier cubes too; skip only forced-parent
        if (!q.forced_parent && dist_cells > 4 * q.width) ++upper_fail;
    }
    if (pyramid_mismatch) throw invariant_violation("whitney: pyramid min mismatch");
    c.lower_bound_failures = lower_fail;
    c.upper_bound_failures = upper_fail;
    c.frontier_count = frontier_count;
    c.window_edge_count = edge_count;

    // partition identity, exact in integers
    std::int64_t closed_in_window = mask_->closed_count();
    c.partition_identity =
        covered_cells + std::int64_t(uncovered_.size()) + closed_in_window == grid.total_cells();

    // adjacency ratios: |level difference| <= 2
    std::int64_t adj_fail = 0;
    int star_max = 0;
    for (const auto& q : cubes_) {
        for (std::int32_t nb : q.neighbors)
            if (std::abs(cubes_[std::size_t(nb)].level - q.level) > 2) ++adj_fail;
        star_max = std::max(star_max, int(q.neighbors.size()) + 1);
    }
    c.adjacency_ratio_failures = adj_fail;
    c.star_overlap_N = star_max;

    // point overlap via corner sweep (half-cell integer containment)
    int overlap = 0;
    for (const auto& q : cubes_) {
        for (int corner = 0; corner < (1 << n); ++corner) {
            std::array<std::int64_t, kMaxDim> p{};
            for (int a = 0; a < n; ++a)
                p[std::size_t(a)] = 2 * (q.cell_lo[std::size_t(a)] + (((corner >> a) & 1) ? q.width : 0));
            int cnt = 0;
            for (int level = min_level_; level <= max_level_; ++level) {
                if (level_map_[std::size_t(level)].empty()) continue;
                const std::int64_t w = extent_ >> level;
                // blocks whose closed cube contains p: per axis index in
                // [(p/2 - w)/w, p/2/w] intersected with range
                std::array<std::int64_t, kMaxDim> blo{}, bhi{};
                for (int a = 0; a < n; ++a) {
                    std::int64_t cells = p[std::size_t(a)] / 2; // corner is on a cell boundary
                    std::int64_t hi_b = cells / w;
                    std::int64_t lo_b = (cells - w >= 0) ? (cells - w) / w : -1;
                    if ((cells % w) != 0) lo_b = hi_b; // interior: single block
                    blo[std::size_t(a)] = std::max<std::int64_t>(lo_b, 0);
                    bhi[std::size_t(a)] = std::min<std::int64_t>(hi_b, (std::int64_t(1) << level) - 1);
                }
                CellCoord b;
                b.dim = n;
                std::array<std::int64_t, kMaxDim> it{};
                for (int a = 0; a < n; ++a) it[std::size_t(a)] = blo[std::size_t(a)];
                while (true) {
                    for (int a = 0; a < n; ++a) b[a] = it[std::size_t(a)];
                    std::int32_t other = cube_at(level, block_linear(level, b));
                    if (other >= 0) {
                        const WhitneyCube& k = cubes_[std::size_t(other)];
                        bool in = true;
                        for (int a = 0; a < n; ++a) {
                            std::int64_t lo2 = 2 * k.cell_lo[std::size_t(a)];
                            std::int64_t hi2 = lo2 + 2 * k.width;
                            if (p[std::size_t(a)] < lo2 || p[std::size_t(a)] > hi2) in = false;
                        }
                        if (in) ++cnt;
                    }
                    int a = 0;
                    for (; a < n; ++a) {
                        if (++it[std::size_t(a)] <= bhi[std::size_t(a)]) break;
                        it[std::size_t(a)] = blo[std::size_t(a)];
                    }
                    if (a == n) break;
                }
            }
            overlap = std::max(overlap, cnt);
        }
    }
    c.point_overlap_N = overlap;

    cert_ = c;
    if (!c.partition_identity) throw invariant_violation("whitney: partition identity failed");
    if (c.lower_bound_failures || c.upper_bound_failures)
        throw invariant_violation("whitney: Theorem 2.5(ii) bound failed on a non-frontier cube");
    if (c.adjacency_ratio_failures)
        throw invariant_violation("whitney: adjacent cube size ratio out of [1/4, 4]");
}

std::vector<std::int32_t> WhitneyFamily::locate(std::span<const double> x) const {
    const GridSpec& grid = mask_->grid();
    const int n = grid.dim();
    const double h = grid.spacing();
    for (int a = 0; a < n; ++a)
        if (x[std::size_t(a)] < window_.lo(a) - 1e-12 || x[std::size_t(a)] > window_.hi(a) + 1e-12)
            throw std::invalid_argument("locate: point outside window");
    CellCoord cc = grid.cell_of_point(x);
    for (int a = 0; a < n; ++a)
        cc[a] = std::clamp<std::int64_t>(cc[a], 0, grid.extent(a) - 1);
    if (mask_->is_closed(grid.linear(cc)))
        throw in_set_error("locate: point lies in S");

    std::vector<std::int32_t> out;
    for (int level = min_level_; level <= max_level_; ++level) {
        if (level_map_[std::size_t(level)].empty()) continue;
        const std::int64_t w = extent_ >> level;
        const double side = double(w) * h;
        const double r_star = (9.0 / 8.0) * 0.5 * side;
        std::array<std::int64_t, kMaxDim> base{};
        for (int a = 0; a < n; ++a)
            base[std::size_t(a)] =
                std::int64_t(std::floor((x[std::size_t(a)] - window_.lo(a)) / side));
        std::array<std::int64_t, kMaxDim> it{};
        for (int a = 0; a < n; ++a) it[std::size_t(a)] = base[std::size_t(a)] - 1;
        const std::int64_t bpa = std::int64_t(1) << level;
        while (true) {
            bool in_range = true;
            for (int a = 0; a < n; ++a)
                if (it[std::size_t(a)] < 0 || it[std::size_t(a)] >= bpa) in_range = false;
            if (in_range) {
                CellCoord b;
                b.dim = n;
                for (int a = 0; a < n; ++a) b[a] = it[std::size_t(a)];
                std::int32_t id = cube_at(level, block_linear(level, b));
                if (id >= 0) {
                    bool inside = true;
                    for (int a = 0; a < n; ++a) {
                        double ctr = window_.lo(a) + (double(it[std::size_t(a)]) + 0.5) * side;
                        if (std::abs(x[std::size_t(a)] - ctr) > r_star) inside = false;
                    }
                    if (inside) out.push_back(id);
                }
            }
            int a = 0;
            for (; a < n; ++a) {
                if (++it[std::size_t(a)] <= base[std::size_t(a)] + 1) break;
                it[std::size_t(a)] = base[std::size_t(a)] - 1;
            }
            if (a == n) break;
        }
    }
    return out;
}

void WhitneyFamily::dump_jsonl(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out.setf(std::ios::fmtflags(0), std::ios::floatfield);
    out.precision(17);
    for (std::size_t id = 0; id < cubes_.size(); ++id) {
        const auto& q = cubes_[id];
        auto ctr = cube_center(std::int32_t(id));
        out << "{\"id\":" << id << ",\"center\":[";
        for (std::size_t a = 0; a < ctr.size(); ++a) out << (a ? "," : "") << ctr[a];
        out << "],\"half_side\":" << cube_half_side(std::int32_t(id)) << ",\"level\":" << q.level
            << ",\"dist_to_S\":" << cube_dist_to_S(std::int32_t(id))
            << ",\"frontier\":" << (q.frontier ? "true" : "false") << ",\"neighbor_ids\":[";
        for (std::size_t k = 0; k < q.neighbors.size(); ++k)
            out << (k ? "," : "") << q.neighbors[k];
        out << "]}\n";
    }
}

} // namespace sobex
