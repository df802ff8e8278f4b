#include "sobex/quasicubes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "sobex/errors.hpp"

namespace sobex {

namespace {

// Nearest closed-cell center to a dyadic cube center (a lattice corner),
// uniform norm, lexicographic tie-break. Expanding Chebyshev shells around
// the corner; distances tracked in half-cell units.
CellIndex nearest_closed_cell(const DomainMask& mask, const std::vector<std::int32_t>& dt,
                              const std::array<std::int64_t, kMaxDim>& corner_half, int n) {
    const GridSpec& grid = mask.grid();
    std::array<std::int64_t, kMaxDim> base{};
    for (int a = 0; a < n; ++a) base[std::size_t(a)] = corner_half[std::size_t(a)] / 2;

    // starting shell from the DT at a cell incident to the corner
    std::int64_t rho0 = 0;
    {
        CellCoord c;
        c.dim = n;
        for (int a = 0; a < n; ++a)
            c[a] = std::clamp<std::int64_t>(base[std::size_t(a)], 0, grid.extent(a) - 1);
        std::int32_t d = dt[std::size_t(grid.linear(c))];
        rho0 = std::max<std::int64_t>(0, std::int64_t(d) - 1);
    }

    std::int64_t best_dist = INT64_MAX;
    CellCoord best;
    best.dim = 0;
    auto consider = [&](const CellCoord& c) {
        if (!grid.in_bounds(c)) return;
        CellIndex ci = grid.linear(c);
        if (!mask.is_closed(ci)) return;
        std::int64_t d = 0;
        for (int a = 0; a < n; ++a)
            d = std::max(d, std::abs(2 * c[a] + 1 - corner_half[std::size_t(a)]));
        if (d < best_dist) {
            best_dist = d;
            best = c;
        } else if (d == best_dist && best.dim != 0) {
            for (int a = 0; a < n; ++a) {
                if (c[a] < best[a]) {
                    best = c;
                    break;
                }
                if (c[a] > best[a]) break;
            }
        }
    };

    for (std::int64_t rho = rho0;; ++rho) {
        if (best_dist != INT64_MAX && 2 * rho - 1 > best_dist) break;
        if (rho > grid.extent(0) * 2 + 2) break; // safety; S nonempty makes this unreachable
        // enumerate the shell max|offset| == rho
        if (rho == 0) {
            CellCoord c;
            c.dim = n;
            for (int a = 0; a < n; ++a) c[a] = base[std::size_t(a)];
            consider(c);
            continue;
        }
        // iterate the full box surface: one axis pinned to +-rho
        for (int pin = 0; pin < n; ++pin) {
            for (int side = 0; side < 2; ++side) {
                std::array<std::int64_t, kMaxDim> off{};
                for (int a = 0; a < n; ++a) off[std::size_t(a)] = -rho;
                off[std::size_t(pin)] = side == 0 ? -rho : rho;
                while (true) {
                    // skip cells already covered by a smaller pinned axis
                    bool fresh = true;
                    for (int a = 0; a < pin; ++a)
                        if (std::abs(off[std::size_t(a)]) == rho) fresh = false;
                    if (fresh) {
                        CellCoord c;
                        c.dim = n;
                        for (int a = 0; a < n; ++a) c[a] = base[std::size_t(a)] + off[std::size_t(a)];
                        consider(c);
                    }
                    int a = 0;
                    for (; a < n; ++a) {
                        if (a == pin) continue;
                        if (++off[std::size_t(a)] <= rho) break;
                        off[std::size_t(a)] = -rho;
                    }
                    if (a >= n) break;
                }
            }
        }
    }
    if (best.dim == 0) throw invariant_violation("nearest_closed_cell: no closed cell found");
    return grid.linear(best);
}

} // namespace

Cube QuasiCubeFamily::reflected_cube(std::int32_t cube_id) const {
    const QuasiCubeEntry& e = entries_[std::size_t(cube_id)];
    if (e.a_cell < 0) throw std::invalid_argument("reflected_cube: big cube has no a_K");
    return Cube(family_->mask().grid().cell_center(e.a_cell),
                epsilon_ * family_->cube_half_side(cube_id));
}

QuasiCubeFamily QuasiCubeFamily::build(std::shared_ptr<const WhitneyFamily> family, double epsilon,
                                       double delta_S, SCellSource source) {
    if (!(epsilon > 0.0 && epsilon <= 1.0))
        throw std::invalid_argument("build_quasicubes: need 0 < epsilon <= 1");
    if (delta_S < 0.0) throw std::invalid_argument("build_quasicubes: delta_S must be >= 0");

    QuasiCubeFamily qf;
    qf.family_ = std::move(family);
    qf.epsilon_ = epsilon;
    qf.delta_S_ = delta_S;
    qf.source_ = source;

    const WhitneyFamily& fam = *qf.family_;
    const DomainMask& mask = fam.mask();
    const GridSpec& grid = mask.grid();
    const auto& dt = fam.dt();
    const int n = grid.dim();
    const double h = grid.spacing();
    const auto& cubes = fam.cubes();
    const std::int32_t count = std::int32_t(cubes.size());
    qf.entries_.assign(cubes.size(), {});

    auto counts_as_S = [&](CellIndex ci) {
        return source == SCellSource::Closed ? mask.is_closed(ci) : mask.is_open(ci);
    };

    // a_K and the paper's containment Q(a_K, r_K) in 10K, for small cubes
    std::int64_t containment_failures = 0;
#pragma omp parallel for schedule(dynamic, 32) reduction(+ : containment_failures)
    for (std::int32_t id = 0; id < count; ++id) {
        const WhitneyCube& q = cubes[std::size_t(id)];
        if (double(q.width) * h > delta_S) continue;
        QuasiCubeEntry& e = qf.entries_[std::size_t(id)];
        e.small = true;
        e.floor_exempt = double(q.width) * h < 4.0 * h / epsilon;
        std::array<std::int64_t, kMaxDim> c_half{};
        for (int a = 0; a < n; ++a)
            c_half[std::size_t(a)] = 2 * q.cell_lo[std::size_t(a)] + q.width;
        e.a_cell = nearest_closed_cell(mask, dt, c_half, n);
        CellCoord ac = grid.decode(e.a_cell);
        for (int a = 0; a < n; ++a) {
            std::int64_t d = std::abs(2 * ac[a] + 1 - c_half[std::size_t(a)]);
            // |a_K - x_K| <= 9 r_K + h/2 exactly on the cell model
            if (d > 9 * q.width + 1) ++containment_failures;
        }
    }
    if (containment_failures)
        throw invariant_violation("build_quasicubes: Q(a_K, r_K) escaped 10K");

    // A_Q by the inverted loop: each small K registers itself with every
    // coarser small Q whose Q_eps its K_eps touches and r_K <= eps r_Q.
    std::vector<std::pair<std::int32_t, std::int32_t>> edges; // (Q, K)
    const std::int64_t E = fam.extent();
    for (std::int32_t kid = 0; kid < count; ++kid) {
        const QuasiCubeEntry& ek = qf.entries_[std::size_t(kid)];
        if (!ek.small) continue;
        const WhitneyCube& K = cubes[std::size_t(kid)];
        CellCoord akc = grid.decode(ek.a_cell);
        std::array<std::int64_t, kMaxDim> alpha{};
        for (int a = 0; a < n; ++a) alpha[std::size_t(a)] = 2 * akc[a] + 1;
        for (int level = fam.min_level(); level <= K.level; ++level) {
            const std::int64_t wq = E >> level;
            if (double(K.width) > epsilon * double(wq) + 1e-12) continue;
            const std::int64_t bound = 11 * wq + 2; // covers |c_Q - a_K| in half-cells
            std::array<std::int64_t, kMaxDim> blo{}, bhi{};
            const std::int64_t bpa = std::int64_t(1) << level;
            for (int a = 0; a < n; ++a) {
                std::int64_t lo = (alpha[std::size_t(a)] - bound - wq) / (2 * wq) - 1;
                std::int64_t hi = (alpha[std::size_t(a)] + bound - wq) / (2 * wq) + 1;
                blo[std::size_t(a)] = std::max<std::int64_t>(lo, 0);
                bhi[std::size_t(a)] = std::min<std::int64_t>(hi, bpa - 1);
            }
            std::array<std::int64_t, kMaxDim> it{};
            for (int a = 0; a < n; ++a) it[std::size_t(a)] = blo[std::size_t(a)];
            if (bhi[0] < blo[0]) continue;
            while (true) {
                CellCoord b;
                b.dim = n;
                for (int a = 0; a < n; ++a) b[a] = it[std::size_t(a)];
                std::int32_t qid = fam.cube_at(level, fam.block_linear(level, b));
                if (qid >= 0 && qid != kid && qf.entries_[std::size_t(qid)].small &&
                    !qf.entries_[std::size_t(qid)].floor_exempt) {
                    const WhitneyCube& Q = cubes[std::size_t(qid)];
                    if (double(K.width) <= epsilon * double(Q.width) + 1e-12) {
                        CellCoord aqc = grid.decode(qf.entries_[std::size_t(qid)].a_cell);
                        bool touch = true;
                        for (int a = 0; a < n; ++a) {
                            double d = double(std::abs(2 * aqc[a] + 1 - alpha[std::size_t(a)]));
                            if (d > epsilon * double(K.width + Q.width)) {
                                touch = false;
                                break;
                            }
                        }
                        if (touch) edges.push_back({qid, kid});
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
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    for (const auto& [qid, kid] : edges) qf.entries_[std::size_t(qid)].removals.push_back(kid);

    // materialize H_Q
    std::vector<std::int32_t> empty_ids;
    for (std::int32_t id = 0; id < count; ++id) {
        QuasiCubeEntry& e = qf.entries_[std::size_t(id)];
        if (!e.small) continue;
        const WhitneyCube& q = cubes[std::size_t(id)];
        CellCoord ac = grid.decode(e.a_cell);
        const double r_eps_half = epsilon * double(q.width); // in half-cells
        const std::int64_t reach = std::int64_t(std::ceil(r_eps_half / 2.0)) + 1;

        std::unordered_set<CellIndex> removed;
        if (!e.floor_exempt) {
            for (std::int32_t kid : e.removals) {
                const WhitneyCube& K = cubes[std::size_t(kid)];
                CellCoord akc = grid.decode(qf.entries_[std::size_t(kid)].a_cell);
                const double r_k_half = epsilon * double(K.width);
                const std::int64_t kreach = std::int64_t(std::ceil(r_k_half / 2.0)) + 1;
                CellCoord it;
                it.dim = n;
                std::array<std::int64_t, kMaxDim> off{};
                for (int a = 0; a < n; ++a) off[std::size_t(a)] = -kreach;
                while (true) {
                    bool ok = true;
                    for (int a = 0; a < n; ++a) {
                        it[a] = akc[a] + off[std::size_t(a)];
                        if (it[a] < 0 || it[a] >= grid.extent(a)) ok = false;
                    }
                    if (ok) {
                        bool inside = true;
                        for (int a = 0; a < n; ++a)
                            if (double(std::abs(2 * it[a] - 2 * akc[a])) > r_k_half) inside = false;
                        if (inside) removed.insert(grid.linear(it));
                    }
                    int a = 0;
                    for (; a < n; ++a) {
                        if (++off[std::size_t(a)] <= kreach) break;
                        off[std::size_t(a)] = -kreach;
                    }
                    if (a == n) break;
                }
            }
        }

        CellCoord it;
        it.dim = n;
        std::array<std::int64_t, kMaxDim> off{};
        for (int a = 0; a < n; ++a) off[std::size_t(a)] = -reach;
        while (true) {
            bool ok = true;
            for (int a = 0; a < n; ++a) {
                it[a] = ac[a] + off[std::size_t(a)];
                if (it[a] < 0 || it[a] >= grid.extent(a)) ok = false;
            }
            if (ok) {
                bool inside = true;
                for (int a = 0; a < n; ++a)
                    if (double(std::abs(2 * it[a] - 2 * ac[a])) > r_eps_half) inside = false;
                if (inside) {
                    CellIndex ci = grid.linear(it);
                    if (counts_as_S(ci) && !removed.count(ci)) e.members.push_back(ci);
                }
            }
            int a = 0;
            for (; a < n; ++a) {
                if (++off[std::size_t(a)] <= reach) break;
                off[std::size_t(a)] = -reach;
            }
            if (a == n) break;
        }
        std::sort(e.members.begin(), e.members.end());
        if (e.members.empty() && !cubes[std::size_t(id)].window_edge) empty_ids.push_back(id);
    }

    // certification; window-edge cubes are finite-window artifacts and stay
    // out of the measured constants
    QuasiCubeCertification cert;
    std::vector<std::int32_t> counts(std::size_t(grid.total_cells()), 0);
    double gamma1 = 0.0;
    for (std::int32_t id = 0; id < count; ++id) {
        const QuasiCubeEntry& e = qf.entries_[std::size_t(id)];
        if (!e.small) continue;
        ++cert.small_count;
        const WhitneyCube& q = cubes[std::size_t(id)];
        if (q.window_edge) {
            ++cert.window_edge_count;
            if (e.members.empty()) ++cert.empty_edge_quasicubes;
            continue;
        }
        if (e.floor_exempt) ++cert.floor_count;
        else ++cert.certified_count;
        std::array<std::int64_t, kMaxDim> c_half{};
        for (int a = 0; a < n; ++a)
            c_half[std::size_t(a)] = 2 * q.cell_lo[std::size_t(a)] + q.width;
        for (CellIndex m : e.members) {
            ++counts[std::size_t(m)];
            CellCoord mc = grid.decode(m);
            for (int a = 0; a < n; ++a)
                if (std::abs(2 * mc[a] + 1 - c_half[std::size_t(a)]) > 10 * q.width)
                    ++cert.containment_failures;
            if (!counts_as_S(m)) ++cert.containment_failures;
        }
        if (!e.floor_exempt && !e.members.empty()) {
            double vol_q = 1.0, hq = double(e.members.size());
            for (int a = 0; a < n; ++a) vol_q *= double(q.width);
            gamma1 = std::max(gamma1, vol_q / hq);
        }
        // disjointness from every subtracted K_eps
        if (!e.floor_exempt) {
            for (std::int32_t kid : e.removals) {
                CellCoord akc = grid.decode(qf.entries_[std::size_t(kid)].a_cell);
                const double r_k_half = epsilon * double(cubes[std::size_t(kid)].width);
                for (CellIndex m : e.members) {
                    CellCoord mc = grid.decode(m);
                    bool inside = true;
                    for (int a = 0; a < n; ++a)
                        if (double(std::abs(2 * mc[a] - 2 * akc[a])) > r_k_half) inside = false;
                    if (inside) ++cert.disjoint_failures;
                }
            }
        }
    }
    cert.gamma1 = gamma1;
    int g2 = 0;
    for (CellIndex ci : mask.closed_cells()) g2 = std::max(g2, counts[std::size_t(ci)]);
    cert.gamma2 = g2;
    cert.empty_quasicubes = std::int64_t(empty_ids.size());
    qf.overlap_count_ = std::move(counts);
    qf.cert_ = cert;

    if (cert.containment_failures)
        throw invariant_violation("build_quasicubes: Theorem (i) containment failed");
    if (cert.disjoint_failures)
        throw invariant_violation("build_quasicubes: H_Q intersects a subtracted K_eps");
    if (!empty_ids.empty())
        throw regularity_violation_error(
            "build_quasicubes: empty H_Q for a cube with diam <= delta_S (set not regular at this scale)",
            std::move(empty_ids));
    return qf;
}

std::map<int, std::int64_t> QuasiCubeFamily::overlap_histogram() const {
    std::map<int, std::int64_t> hist;
    const auto& cells = source_ == SCellSource::Closed ? family_->mask().closed_cells()
                                                       : family_->mask().open_cells();
    for (CellIndex ci : cells) ++hist[overlap_count_[std::size_t(ci)]];
    return hist;
}

void QuasiCubeFamily::dump_jsonl(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out.precision(17);
    const GridSpec& grid = family_->mask().grid();
    for (std::size_t id = 0; id < entries_.size(); ++id) {
        const auto& e = entries_[id];
        if (!e.small) continue;
        auto a = grid.cell_center(e.a_cell);
        double vol_q = 1.0;
        for (int ax = 0; ax < grid.dim(); ++ax) vol_q *= double(family_->cube(std::int32_t(id)).width);
        out << "{\"cube_id\":" << id << ",\"a_K\":[";
        for (std::size_t ax = 0; ax < a.size(); ++ax) out << (ax ? "," : "") << a[ax];
        out << "],\"epsilon\":" << epsilon_ << ",\"member_count\":" << e.members.size()
            << ",\"ratio\":" << (e.members.empty() ? 0.0 : vol_q / double(e.members.size()))
            << ",\"floor\":" << (e.floor_exempt ? "true" : "false") << "}\n";
    }
}

} // namespace sobex
