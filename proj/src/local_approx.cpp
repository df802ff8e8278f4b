#include "sobex/local_approx.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "sobex/errors.hpp"

namespace sobex {

namespace {

double lp_objective(const ScalarField& u, const std::vector<CellIndex>& region, double p, double c) {
    if (std::isinf(p)) {
        double m = 0.0;
        for (CellIndex i : region) m = std::max(m, std::abs(u[i] - c));
        return m;
    }
    const double w = u.cell_measure();
    double s = 0.0;
    for (CellIndex i : region) s += std::pow(std::abs(u[i] - c), p) * w;
    return std::pow(s, 1.0 / p);
}

} // namespace

BestConstant best_constant(const ScalarField& u, const std::vector<CellIndex>& region, double p) {
    if (region.empty()) throw empty_region_error("best_constant: empty region");
    if (p < 1.0) throw std::invalid_argument("best_constant: p must be >= 1");

    if (std::isinf(p)) {
        double lo = u[region[0]], hi = lo;
        for (CellIndex i : region) {
            lo = std::min(lo, u[i]);
            hi = std::max(hi, u[i]);
        }
        return {0.5 * (lo + hi), 0.5 * (hi - lo)};
    }
    if (p == 2.0) {
        double mean = 0.0;
        for (CellIndex i : region) mean += u[i];
        mean /= double(region.size());
        return {mean, lp_objective(u, region, p, mean)};
    }
    if (p == 1.0) {
        std::vector<double> vals;
        vals.reserve(region.size());
        for (CellIndex i : region) vals.push_back(u[i]);
        std::sort(vals.begin(), vals.end());
        const std::size_t m = vals.size();
        double med = (m % 2 == 1) ? vals[m / 2] : 0.5 * (vals[m / 2 - 1] + vals[m / 2]);
        return {med, lp_objective(u, region, p, med)};
    }
    // golden-section on the convex objective over [min u, max u]
    double lo = u[region[0]], hi = lo;
    for (CellIndex i : region) {
        lo = std::min(lo, u[i]);
        hi = std::max(hi, u[i]);
    }
    if (hi - lo == 0.0) return {lo, 0.0};
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = lp_objective(u, region, p, x1), f2 = lp_objective(u, region, p, x2);
    for (int it = 0; it < 96 && (b - a) > 1e-13 * (std::abs(lo) + std::abs(hi) + 1.0); ++it) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = lp_objective(u, region, p, x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = lp_objective(u, region, p, x2);
        }
    }
    double c = 0.5 * (a + b);
    return {c, lp_objective(u, region, p, c)};
}

BestConstant best_constant_bruteforce(const ScalarField& u, const std::vector<CellIndex>& region,
                                      double p, int candidates) {
    if (region.empty()) throw empty_region_error("best_constant_bruteforce: empty region");
    double lo = u[region[0]], hi = lo;
    for (CellIndex i : region) {
        lo = std::min(lo, u[i]);
        hi = std::max(hi, u[i]);
    }
    auto scan = [&](double a, double b) {
        BestConstant best{a, lp_objective(u, region, p, a)};
        for (int k = 1; k < candidates; ++k) {
            double c = a + (b - a) * double(k) / double(candidates - 1);
            double e = lp_objective(u, region, p, c);
            if (e < best.error) best = {c, e};
        }
        return best;
    };
    BestConstant coarse = scan(lo, hi);
    if (hi - lo == 0.0) return coarse;
    // refine around the coarse winner; the objective can have unbounded
    // curvature at sample values for fractional p
    double step = (hi - lo) / double(candidates - 1);
    BestConstant fine = scan(std::max(lo, coarse.c - step), std::min(hi, coarse.c + step));
    return fine.error < coarse.error ? fine : coarse;
}

namespace {

std::vector<CellIndex> cells_box_query(const GridSpec& grid, const DomainMask* mask, const Cube& q,
                                       double shrink) {
    const int n = grid.dim();
    const double h = grid.spacing();
    std::array<std::int64_t, kMaxDim> lo{}, hi{};
    for (int a = 0; a < n; ++a) {
        double c = q.center[std::size_t(a)], o = grid.origin()[std::size_t(a)];
        const double r = q.half_side - shrink;
        lo[std::size_t(a)] = std::int64_t(std::ceil((c - r - o) / h - 0.5 - 1e-12));
        hi[std::size_t(a)] = std::int64_t(std::floor((c + r - o) / h - 0.5 + 1e-12));
        lo[std::size_t(a)] = std::max<std::int64_t>(lo[std::size_t(a)], 0);
        hi[std::size_t(a)] = std::min<std::int64_t>(hi[std::size_t(a)], grid.extent(a) - 1);
        if (hi[std::size_t(a)] < lo[std::size_t(a)]) return {};
    }
    std::vector<CellIndex> out;
    CellCoord c;
    c.dim = n;
    std::array<std::int64_t, kMaxDim> it{};
    for (int a = 0; a < n; ++a) it[std::size_t(a)] = lo[std::size_t(a)];
    while (true) {
        for (int a = 0; a < n; ++a) c[a] = it[std::size_t(a)];
        CellIndex ci = grid.linear(c);
        if (!mask || mask->is_closed(ci)) out.push_back(ci);
        int a = 0;
        for (; a < n; ++a) {
            if (++it[std::size_t(a)] <= hi[std::size_t(a)]) break;
            it[std::size_t(a)] = lo[std::size_t(a)];
        }
        if (a == n) break;
    }
    return out;
}

} // namespace

std::vector<CellIndex> cells_in_cube(const GridSpec& grid, const DomainMask* mask, const Cube& q) {
    return cells_box_query(grid, mask, q, 0.0);
}

std::vector<CellIndex> cells_inside_cube(const GridSpec& grid, const DomainMask* mask, const Cube& q) {
    return cells_box_query(grid, mask, q, 0.5 * grid.spacing());
}

double lambda(const ScalarField& u, const Cube& q, const DomainMask* mask, double p) {
    std::vector<CellIndex> cells = cells_inside_cube(u.grid, mask, q);
    if (cells.empty()) return 0.0;
    BestConstant bc = best_constant(u, cells, p);
    if (std::isinf(p)) return bc.error;
    const double vol = std::pow(q.diam(), u.grid.dim());
    return std::pow(vol, -1.0 / p) * bc.error;
}

double mean_projection(const ScalarField& u, const std::vector<CellIndex>& region) {
    if (region.empty()) throw empty_region_error("mean_projection: empty region");
    double s = 0.0;
    for (CellIndex i : region) s += u[i];
    return s / double(region.size());
}

std::vector<double> dyadic_radii(const GridSpec& grid, double diam) {
    std::vector<double> radii;
    for (double r = grid.spacing(); r < diam * 2.0; r *= 2.0) {
        radii.push_back(r);
        if (r >= diam) break;
    }
    return radii;
}

namespace {

// exact L^1 data: median and sum of absolute deviations
double exact_sad(std::vector<double>& vals) {
    const std::size_t m = vals.size();
    std::nth_element(vals.begin(), vals.begin() + m / 2, vals.end());
    double med = vals[m / 2];
    if (m % 2 == 0) {
        double lower = *std::max_element(vals.begin(), vals.begin() + m / 2);
        med = 0.5 * (med + lower);
    }
    double sad = 0.0;
    for (double v : vals) sad += std::abs(v - med);
    return sad;
}

ScalarField sharp_exact(const ScalarField& u, const DomainMask& mask,
                        const std::vector<std::int64_t>& radii_cells) {
    const GridSpec& grid = u.grid;
    const int n = grid.dim();
    const double h = grid.spacing();
    ScalarField out(grid, u.mask);
    const auto& closed = mask.closed_cells();
    const std::int64_t count = std::int64_t(closed.size());
#pragma omp parallel
    {
        std::vector<double> vals;
#pragma omp for schedule(dynamic, 64)
        for (std::int64_t k = 0; k < count; ++k) {
            CellIndex ci = closed[std::size_t(k)];
            CellCoord cc = grid.decode(ci);
            double best = 0.0;
            for (std::int64_t rc : radii_cells) {
                const std::int64_t reach = rc - 1; // cells fully inside Q(x, rc h)
                if (reach < 0) continue;
                vals.clear();
                CellCoord it;
                it.dim = n;
                std::array<std::int64_t, kMaxDim> off{};
                for (int a = 0; a < n; ++a) off[std::size_t(a)] = -reach;
                while (true) {
                    bool ok = true;
                    for (int a = 0; a < n; ++a) {
                        it[a] = cc[a] + off[std::size_t(a)];
                        if (it[a] < 0 || it[a] >= grid.extent(a)) ok = false;
                    }
                    if (ok) {
                        CellIndex oi = grid.linear(it);
                        if (mask.is_closed(oi)) vals.push_back(u[oi]);
                    }
                    int a = 0;
                    for (; a < n; ++a) {
                        if (++off[std::size_t(a)] <= reach) break;
                        off[std::size_t(a)] = -reach;
                    }
                    if (a == n) break;
                }
                if (vals.empty()) continue;
                const double r = double(rc) * h;
                double vol = std::pow(2.0 * r, n);
                double lam = exact_sad(vals) * std::pow(h, n) / vol;
                best = std::max(best, lam / r);
            }
            out[ci] = best;
        }
    }
    return out;
}

// Two-tier sliding histogram kernel (2-D). Values are binned into
// 256 x 256 tiers; counts locate the median bin, exact per-bin value sums
// give the absolute-deviation total to within one bin width.
ScalarField sharp_histogram_2d(const ScalarField& u, const DomainMask& mask,
                               const std::vector<std::int64_t>& radii_cells,
                               const std::vector<std::int64_t>& exact_radii, ScalarField out) {
    constexpr int kFine = 65536;
    constexpr int kCoarse = 256;
    const GridSpec& grid = u.grid;
    const double h = grid.spacing();
    const std::int64_t nx = grid.extent(0), ny = grid.extent(1);

    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (CellIndex ci : mask.closed_cells()) {
        double v = u[ci];
        if (first) {
            lo = hi = v;
            first = false;
        } else {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    const double range = hi - lo;
    if (range <= 0.0) return out; // constant on A: Lambda == 0 at all scales

    const double inv_bin = double(kFine - 1) / range;
    const double binw = range / double(kFine - 1);

    for (std::int64_t rc : radii_cells) {
        const double r = double(rc) * h;
        const double scale = h * h / (4.0 * r * r * r); // h^n / (|Q| r)
        const std::int64_t reach = rc - 1;              // cells fully inside Q(x, rc h)
        if (reach < 0) continue;
#pragma omp parallel
        {
            std::vector<std::int32_t> cnt_fine(kFine), cnt_coarse(kCoarse);
            std::vector<double> sum_fine(kFine), sum_coarse(kCoarse);
#pragma omp for schedule(dynamic, 4)
            for (std::int64_t row = 0; row < nx; ++row) {
                std::memset(cnt_fine.data(), 0, sizeof(std::int32_t) * kFine);
                std::memset(cnt_coarse.data(), 0, sizeof(std::int32_t) * kCoarse);
                std::memset(sum_fine.data(), 0, sizeof(double) * kFine);
                std::memset(sum_coarse.data(), 0, sizeof(double) * kCoarse);
                std::int64_t total_cnt = 0;
                double total_sum = 0.0;

                auto add_col = [&](std::int64_t col, int sign) {
                    if (col < 0 || col >= ny) return;
                    const std::int64_t r0 = std::max<std::int64_t>(0, row - reach);
                    const std::int64_t r1 = std::min<std::int64_t>(nx - 1, row + reach);
                    for (std::int64_t rr = r0; rr <= r1; ++rr) {
                        CellIndex ci = rr * ny + col;
                        if (!mask.is_closed(ci)) continue;
                        double v = u[ci];
                        int b = int((v - lo) * inv_bin);
                        b = std::clamp(b, 0, kFine - 1);
                        cnt_fine[std::size_t(b)] += sign;
                        cnt_coarse[std::size_t(b >> 8)] += sign;
                        sum_fine[std::size_t(b)] += sign * v;
                        sum_coarse[std::size_t(b >> 8)] += sign * v;
                        total_cnt += sign;
                        total_sum += sign * v;
                    }
                };
                for (std::int64_t col = -reach; col <= reach; ++col) add_col(col, +1);

                for (std::int64_t x = 0; x < ny; ++x) {
                    if (x > 0) {
                        add_col(x + reach, +1);
                        add_col(x - reach - 1, -1);
                    }
                    CellIndex center = row * ny + x;
                    if (!mask.is_closed(center) || total_cnt == 0) continue;
                    // locate the median bin
                    const std::int64_t k = (total_cnt + 1) / 2;
                    std::int64_t cum = 0;
                    double sum_below = 0.0;
                    int cb = 0;
                    while (cum + cnt_coarse[std::size_t(cb)] < k) {
                        cum += cnt_coarse[std::size_t(cb)];
                        sum_below += sum_coarse[std::size_t(cb)];
                        ++cb;
                    }
                    int fb = cb << 8;
                    while (cum + cnt_fine[std::size_t(fb)] < k) {
                        cum += cnt_fine[std::size_t(fb)];
                        sum_below += sum_fine[std::size_t(fb)];
                        ++fb;
                    }
                    const std::int64_t cnt_b = cum;
                    const std::int64_t cnt_m = cnt_fine[std::size_t(fb)];
                    const double sum_m = sum_fine[std::size_t(fb)];
                    const std::int64_t cnt_a = total_cnt - cnt_b - cnt_m;
                    const double sum_a = total_sum - sum_below - sum_m;
                    const double c = lo + (double(fb) + 0.5) * binw;
                    double sad = (c * double(cnt_b) - sum_below) + (sum_a - c * double(cnt_a)) +
                                 std::abs(sum_m - c * double(cnt_m));
                    double contrib = sad * scale;
                    if (contrib > out[center]) out[center] = contrib;
                }
            }
        }
    }

    // finest radii exactly (quantization would dominate there)
    if (!exact_radii.empty()) {
        const auto& closed = mask.closed_cells();
        const std::int64_t count = std::int64_t(closed.size());
#pragma omp parallel
        {
            std::vector<double> vals;
#pragma omp for schedule(dynamic, 64)
            for (std::int64_t k = 0; k < count; ++k) {
                CellIndex ci = closed[std::size_t(k)];
                CellCoord cc = grid.decode(ci);
                for (std::int64_t rc : exact_radii) {
                    const std::int64_t reach = rc - 1;
                    if (reach < 0) continue;
                    vals.clear();
                    for (std::int64_t dr = -reach; dr <= reach; ++dr) {
                        if (cc[0] + dr < 0 || cc[0] + dr >= nx) continue;
                        for (std::int64_t dc = -reach; dc <= reach; ++dc) {
                            if (cc[1] + dc < 0 || cc[1] + dc >= ny) continue;
                            CellIndex oi = (cc[0] + dr) * ny + (cc[1] + dc);
                            if (mask.is_closed(oi)) vals.push_back(u[oi]);
                        }
                    }
                    if (vals.empty()) continue;
                    const double r = double(rc) * h;
                    double lam = exact_sad(vals) * h * h / (4.0 * r * r);
                    double contrib = lam / r;
                    if (contrib > out[ci]) out[ci] = contrib;
                }
            }
        }
    }
    return out;
}

} // namespace

ScalarField sharp_maximal(const ScalarField& u, const DomainMask& mask,
                          const std::vector<double>& radii, SharpMethod method) {
    const GridSpec& grid = u.grid;
    const double h = grid.spacing();
    std::vector<std::int64_t> radii_cells;
    for (double r : radii) {
        std::int64_t rc = std::int64_t(std::llround(r / h));
        if (rc < 1 || std::abs(double(rc) * h - r) > 1e-9 * h)
            throw std::invalid_argument("sharp_maximal: radii must be positive multiples of h");
        radii_cells.push_back(rc);
    }
    const bool fast = method == SharpMethod::Histogram ||
                      (method == SharpMethod::Auto && grid.dim() == 2);
    if (!fast || grid.dim() != 2) return sharp_exact(u, mask, radii_cells);

    std::vector<std::int64_t> small, big;
    for (std::int64_t rc : radii_cells) (rc <= 4 ? small : big).push_back(rc);
    ScalarField out(grid, u.mask);
    return sharp_histogram_2d(u, mask, big, small, std::move(out));
}

std::vector<ScalarField> gradient_fields(const ScalarField& u, const DomainMask* mask) {
    const GridSpec& grid = u.grid;
    const int n = grid.dim();
    const double h = grid.spacing();
    auto open = [&](const CellCoord& c) {
        if (!grid.in_bounds(c)) return false;
        return !mask || mask->is_open(grid.linear(c));
    };
    std::vector<ScalarField> grads;
    for (int a = 0; a < n; ++a) grads.emplace_back(grid, u.mask);

    const std::int64_t total = grid.total_cells();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < total; ++i) {
        CellCoord c = grid.decode(i);
        if (mask && !mask->is_open(i)) continue;
        for (int a = 0; a < n; ++a) {
            CellCoord l = c, r = c;
            --l[a];
            ++r[a];
            const bool has_l = open(l), has_r = open(r);
            double g = 0.0;
            if (has_l && has_r)
                g = (u[grid.linear(r)] - u[grid.linear(l)]) / (2.0 * h);
            else if (has_r)
                g = (u[grid.linear(r)] - u[i]) / h;
            else if (has_l)
                g = (u[i] - u[grid.linear(l)]) / h;
            grads[std::size_t(a)][i] = g;
        }
    }
    return grads;
}

SobolevReport sobolev_report(const ScalarField& u, const DomainMask* mask, double p,
                             bool with_sharp, SharpMethod method) {
    const GridSpec& grid = u.grid;
    const int n = grid.dim();

    std::vector<CellIndex> open;
    if (mask) {
        open = mask->open_cells();
    } else {
        open.resize(std::size_t(grid.total_cells()));
        for (CellIndex i = 0; i < grid.total_cells(); ++i) open[std::size_t(i)] = i;
    }
    if (open.empty()) throw empty_domain_error("sobolev_report: no open cells");

    // degenerate when no open cell admits a difference quotient on any axis
    bool any_interior = false;
    for (CellIndex i : open) {
        CellCoord c = grid.decode(i);
        for (int a = 0; a < n && !any_interior; ++a) {
            CellCoord l = c, r = c;
            --l[a];
            ++r[a];
            auto ok = [&](const CellCoord& cc) {
                return grid.in_bounds(cc) && (!mask || mask->is_open(grid.linear(cc)));
            };
            if (ok(l) || ok(r)) any_interior = true;
        }
        if (any_interior) break;
    }
    if (!any_interior)
        throw domain_flag_error("sobolev_report: degenerate domain, no difference quotient exists");

    SobolevReport rep;
    rep.p = p;
    rep.lp_norm = p_norm(u, open, p);
    auto grads = gradient_fields(u, mask);
    double gsum = 0.0;
    for (const auto& g : grads) gsum += p_norm(g, open, p);
    rep.grad_lp_norm = gsum;
    rep.w1p_norm = rep.lp_norm + rep.grad_lp_norm;

    if (with_sharp) {
        const DomainMask* m = mask;
        std::shared_ptr<const DomainMask> full;
        if (!m) {
            std::vector<std::uint8_t> state(std::size_t(grid.total_cells()), 2);
            full = std::make_shared<DomainMask>(grid, std::move(state));
            m = full.get();
        }
        auto radii = dyadic_radii(grid, m->closed_diam());
        ScalarField sharp = sharp_maximal(u, *m, radii, method);
        rep.sharp_lp_norm = p_norm(sharp, m->closed_cells(), p);
        rep.c1p_norm = rep.lp_norm + rep.sharp_lp_norm;
    }
    return rep;
}

} // namespace sobex
