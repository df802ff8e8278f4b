#include "sobex/product.hpp"

#include <algorithm>
#include <cmath>

#include "sobex/errors.hpp"

namespace sobex {

ProductField transpose(const ProductField& u) {
    ProductField out(u.grid_y, u.grid_x, u.mask_y, u.mask_x);
    const std::int64_t nx = u.nx(), ny = u.ny();
#pragma omp parallel for schedule(static)
    for (std::int64_t y = 0; y < ny; ++y)
        for (std::int64_t x = 0; x < nx; ++x)
            out.values[std::size_t(x * ny + y)] = u.values[std::size_t(y * nx + x)];
    return out;
}

std::vector<FiberRun> fiber_runs(const DomainMask& mask, int axis) {
    const GridSpec& grid = mask.grid();
    const int n = grid.dim();
    const std::int64_t m = grid.extent(axis);
    const std::int64_t step = grid.stride(axis);
    const std::int64_t lines = grid.total_cells() / m;
    std::vector<FiberRun> runs;
    for (std::int64_t line = 0; line < lines; ++line) {
        std::int64_t base = 0, rem = line;
        for (int b = 0; b < n; ++b) {
            if (b == axis) continue;
            base += (rem % grid.extent(b)) * grid.stride(b);
            rem /= grid.extent(b);
        }
        FiberRun run;
        for (std::int64_t i = 0; i < m; ++i) {
            CellIndex ci = base + i * step;
            if (mask.is_open(ci)) {
                run.cells.push_back(ci);
            } else if (!run.cells.empty()) {
                runs.push_back(std::move(run));
                run = {};
            }
        }
        if (!run.cells.empty()) runs.push_back(std::move(run));
    }
    return runs;
}

ProductField extend_first_factor(const ProductField& u, const ExtensionMap& map1, bool all_slices) {
    if (!(u.grid_x == map1.target()))
        throw std::invalid_argument("extend_first_factor: grid_x must be the map's window grid");
    ProductField out(u.grid_x, u.grid_y, u.mask_x, u.mask_y);
    std::vector<CellIndex> slices;
    if (all_slices) {
        slices.resize(std::size_t(u.ny()));
        for (CellIndex y = 0; y < u.ny(); ++y) slices[std::size_t(y)] = y;
    } else {
        if (!u.mask_y) throw std::invalid_argument("extend_first_factor: mask_y required");
        slices = u.mask_y->closed_cells();
    }
    const std::int64_t count = std::int64_t(slices.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < count; ++k) {
        CellIndex y = slices[std::size_t(k)];
        map1.apply_raw(u.slice(y), out.slice(y));
    }
    return out;
}

namespace {

// finite difference along one x-factor axis over the whole window
void fd_x_axis(const GridSpec& gx, const double* slice, int axis, double* out) {
    const double h = gx.spacing();
    const std::int64_t total = gx.total_cells();
    for (CellIndex i = 0; i < total; ++i) {
        CellCoord c = gx.decode(i);
        CellCoord l = c, r = c;
        --l[axis];
        ++r[axis];
        const bool has_l = l[axis] >= 0, has_r = r[axis] < gx.extent(axis);
        if (has_l && has_r)
            out[std::size_t(i)] = (slice[std::size_t(gx.linear(r))] - slice[std::size_t(gx.linear(l))]) / (2.0 * h);
        else if (has_r)
            out[std::size_t(i)] = (slice[std::size_t(gx.linear(r))] - slice[std::size_t(i)]) / h;
        else if (has_l)
            out[std::size_t(i)] = (slice[std::size_t(i)] - slice[std::size_t(gx.linear(l))]) / h;
        else
            out[std::size_t(i)] = 0.0;
    }
}

} // namespace

DiscrepancyReport x_derivative_check(const ProductField& u, const ExtensionMap& map1, int axis,
                                     double p) {
    if (!u.mask_y || !u.mask_x) throw std::invalid_argument("x_derivative_check: masks required");
    ProductField e1 = extend_first_factor(u, map1, false);
    DiscrepancyReport rep;

    const GridSpec& gx = u.grid_x;
    std::vector<double> fd_a(static_cast<std::size_t>(gx.total_cells()));
    std::vector<double> fd_b(static_cast<std::size_t>(gx.total_cells()));
    std::vector<double> slice_buf(static_cast<std::size_t>(gx.total_cells()));

    double num = 0.0, den = 0.0;
    const double mx = std::pow(gx.spacing(), gx.dim());
    const double my = std::pow(u.grid_y.spacing(), u.grid_y.dim());

    // den: ||u||_p^p + ||d_axis u||_p^p over Omega_1 x Omega_2
    for (CellIndex y : u.mask_y->open_cells()) {
        const double* uy = u.slice(y);
        fd_x_axis(gx, uy, axis, fd_b.data());
        for (CellIndex x : u.mask_x->open_cells()) {
            // difference quotients inside Omega_1 only
            CellCoord c = gx.decode(x);
            CellCoord l = c, r = c;
            --l[axis];
            ++r[axis];
            auto open_x = [&](const CellCoord& cc) {
                return gx.in_bounds(cc) && u.mask_x->is_open(gx.linear(cc));
            };
            double g = 0.0;
            const bool has_l = open_x(l), has_r = open_x(r);
            if (has_l && has_r)
                g = (uy[std::size_t(gx.linear(r))] - uy[std::size_t(gx.linear(l))]) / (2.0 * gx.spacing());
            else if (has_r)
                g = (uy[std::size_t(gx.linear(r))] - uy[std::size_t(x)]) / gx.spacing();
            else if (has_l)
                g = (uy[std::size_t(x)] - uy[std::size_t(gx.linear(l))]) / gx.spacing();
            den += (std::pow(std::abs(uy[std::size_t(x)]), p) + std::pow(std::abs(g), p)) * mx * my;
        }
    }

    // num: ||d_axis E1 u||_p^p over window x Omega_2, plus the definitional
    // identity: the slice of E1 u equals a fresh apply of the same slice
    for (CellIndex y : u.mask_y->open_cells()) {
        fd_x_axis(gx, e1.slice(y), axis, fd_a.data());
        map1.apply_raw(u.slice(y), slice_buf.data());
        fd_x_axis(gx, slice_buf.data(), axis, fd_b.data());
        for (CellIndex x = 0; x < gx.total_cells(); ++x) {
            rep.sup_diff = std::max(rep.sup_diff, std::abs(fd_a[std::size_t(x)] - fd_b[std::size_t(x)]));
            num += std::pow(std::abs(fd_a[std::size_t(x)]), p) * mx * my;
            ++rep.points_checked;
        }
    }
    rep.norm_ratio = den > 0.0 ? num / den : 0.0;
    return rep;
}

DiscrepancyReport commutation_check(const ProductField& u, const ProductField& du_dyj,
                                    const ExtensionMap& map1, int axis) {
    if (!u.mask_y) throw std::invalid_argument("commutation_check: mask_y required");
    ProductField e1 = extend_first_factor(u, map1, false);
    ProductField e1du = extend_first_factor(du_dyj, map1, false);
    const double hy = u.grid_y.spacing();

    // x cells where the extension row is a full convex combination
    std::vector<CellIndex> layer;
    for (CellIndex x = 0; x < u.nx(); ++x)
        if (map1.row_kind(x) == RowKind::Unit) layer.push_back(x);

    DiscrepancyReport rep;
    auto runs = fiber_runs(*u.mask_y, axis);
    for (const auto& run : runs) {
        const std::int64_t len = std::int64_t(run.cells.size());
        if (len < 2) {
            ++rep.skipped_short_runs;
            continue;
        }
        for (std::int64_t k = 0; k < len; ++k) {
            CellIndex y = run.cells[std::size_t(k)];
            CellIndex yl = run.cells[std::size_t(std::max<std::int64_t>(k - 1, 0))];
            CellIndex yr = run.cells[std::size_t(std::min<std::int64_t>(k + 1, len - 1))];
            const double denom = (k == 0 || k == len - 1) ? hy : 2.0 * hy;
            for (CellIndex x : layer) {
                const double d1 = (e1.at(x, yr) - e1.at(x, yl)) / denom;
                const double d2 = e1du.at(x, y);
                rep.sup_diff = std::max(rep.sup_diff, std::abs(d1 - d2));
                ++rep.points_checked;
            }
        }
    }
    return rep;
}

ProductField extend_product(const ProductField& u, const ExtensionMap& map1, const ExtensionMap& map2) {
    ProductField stage1 = extend_first_factor(u, map1, false);
    ProductField t1 = transpose(stage1);
    ProductField stage2 = extend_first_factor(t1, map2, true);
    return transpose(stage2);
}

ConverseReport restriction_converse_check(const ProductField& w, const DomainMask& mask_x,
                                          const ScalarField& u, const std::vector<CellIndex>& ball_y,
                                          double p) {
    ConverseReport rep;
    bool first = true;
    for (CellIndex y : ball_y) {
        ScalarField slice(w.grid_x);
        std::copy(w.slice(y), w.slice(y) + w.nx(), slice.values.begin());
        bool pass = true;
        for (CellIndex x : mask_x.open_cells())
            if (slice[x] != u[x]) pass = false;
        SobolevReport rp = sobolev_report(slice, nullptr, p, false);
        if (first) {
            rep.max_slice_norm = rep.min_slice_norm = rp.w1p_norm;
            first = false;
        } else {
            rep.max_slice_norm = std::max(rep.max_slice_norm, rp.w1p_norm);
            rep.min_slice_norm = std::min(rep.min_slice_norm, rp.w1p_norm);
        }
        ++rep.slices_checked;
        if (pass) ++rep.slices_passed;
    }
    return rep;
}

namespace {

inline bool region_ok(const ProductField& u, ProductRegion region, CellIndex x, CellIndex y) {
    if (region == ProductRegion::All) return true;
    return u.mask_x && u.mask_y && u.mask_x->is_open(x) && u.mask_y->is_open(y);
}

} // namespace

double product_p_norm(const ProductField& u, ProductRegion region, double p) {
    const double w = u.cell_measure();
    const std::int64_t nx = u.nx(), ny = u.ny();
    std::vector<double> partial(std::size_t(ny), 0.0);
#pragma omp parallel for schedule(static)
    for (std::int64_t y = 0; y < ny; ++y) {
        double s = 0.0;
        for (std::int64_t x = 0; x < nx; ++x)
            if (region_ok(u, region, x, y)) s += std::pow(std::abs(u.at(x, y)), p) * w;
        partial[std::size_t(y)] = s;
    }
    double total = 0.0;
    for (double s : partial) total += s;
    return std::pow(total, 1.0 / p);
}

double product_w1p_norm(const ProductField& u, ProductRegion region, double p) {
    const double w = u.cell_measure();
    const std::int64_t nx = u.nx(), ny = u.ny();
    const GridSpec& gx = u.grid_x;
    const GridSpec& gy = u.grid_y;
    const int naxes = gx.dim() + gy.dim();

    double norm = product_p_norm(u, region, p);
    for (int axis = 0; axis < naxes; ++axis) {
        const bool in_x = axis < gx.dim();
        const int a = in_x ? axis : axis - gx.dim();
        const double h = in_x ? gx.spacing() : gy.spacing();
        std::vector<double> partial(std::size_t(ny), 0.0);
#pragma omp parallel for schedule(static)
        for (std::int64_t y = 0; y < ny; ++y) {
            double s = 0.0;
            for (std::int64_t x = 0; x < nx; ++x) {
                if (!region_ok(u, region, x, y)) continue;
                CellIndex xl = x, xr = x, yl = y, yr = y;
                bool has_l, has_r;
                if (in_x) {
                    CellCoord c = gx.decode(x);
                    CellCoord l = c, r = c;
                    --l[a];
                    ++r[a];
                    has_l = l[a] >= 0;
                    has_r = r[a] < gx.extent(a);
                    if (has_l) xl = gx.linear(l);
                    if (has_r) xr = gx.linear(r);
                    has_l = has_l && region_ok(u, region, xl, y);
                    has_r = has_r && region_ok(u, region, xr, y);
                } else {
                    CellCoord c = gy.decode(y);
                    CellCoord l = c, r = c;
                    --l[a];
                    ++r[a];
                    has_l = l[a] >= 0;
                    has_r = r[a] < gy.extent(a);
                    if (has_l) yl = gy.linear(l);
                    if (has_r) yr = gy.linear(r);
                    has_l = has_l && region_ok(u, region, x, yl);
                    has_r = has_r && region_ok(u, region, x, yr);
                }
                double g = 0.0;
                if (has_l && has_r)
                    g = (u.at(xr, yr) - u.at(xl, yl)) / (2.0 * h);
                else if (has_r)
                    g = (u.at(xr, yr) - u.at(x, y)) / h;
                else if (has_l)
                    g = (u.at(x, y) - u.at(xl, yl)) / h;
                s += std::pow(std::abs(g), p) * w;
            }
            partial[std::size_t(y)] = s;
        }
        double total = 0.0;
        for (double s : partial) total += s;
        norm += std::pow(total, 1.0 / p);
    }
    return norm;
}

} // namespace sobex
