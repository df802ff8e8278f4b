#include "sobex/distance.hpp"

#include <algorithm>

namespace sobex {

namespace {

// 1-D lower-envelope scan for the chessboard metric:
//   out[x] = min_i max(|x - i|, g[i])
// s/t stacks as in Meijster-Roerdink-Hesselink with
//   Sep(i,u) = g(i) <= g(u) ? max(i + g(u), (i+u)/2) : min(u - g(i), (i+u)/2)
void envelope_scan(const std::int64_t* g, std::int64_t* out, std::int64_t m,
                   std::int64_t* s, std::int64_t* t) {
    auto f = [&](std::int64_t x, std::int64_t i) {
        return std::max(x >= i ? x - i : i - x, g[i]);
    };
    auto sep = [&](std::int64_t i, std::int64_t u) {
        if (g[i] <= g[u]) return std::max(i + g[u], (i + u) / 2);
        return std::min(u - g[i], (i + u) / 2);
    };
    std::int64_t q = 0;
    s[0] = 0;
    t[0] = 0;
    for (std::int64_t u = 1; u < m; ++u) {
        while (q >= 0 && f(t[q], s[q]) > f(t[q], u)) --q;
        if (q < 0) {
            q = 0;
            s[0] = u;
            t[0] = 0;
        } else {
            std::int64_t w = 1 + sep(s[q], u);
            if (w < m) {
                ++q;
                s[q] = u;
                t[q] = w;
            }
        }
    }
    for (std::int64_t u = m - 1; u >= 0; --u) {
        out[u] = f(u, s[q]);
        if (u == t[q]) --q;
    }
}

} // namespace

std::vector<std::int32_t> chebyshev_dt(const DomainMask& mask) {
    const GridSpec& grid = mask.grid();
    const int n = grid.dim();
    const std::int64_t total = grid.total_cells();
    std::int64_t clamp = 0;
    for (int a = 0; a < n; ++a) clamp += grid.extent(a);
    clamp += 1;

    std::vector<std::int64_t> dist(static_cast<std::size_t>(total));
    for (std::int64_t i = 0; i < total; ++i)
        dist[std::size_t(i)] = mask.state()[std::size_t(i)] >= 1 ? 0 : clamp;

    for (int a = 0; a < n; ++a) {
        const std::int64_t m = grid.extent(a);
        const std::int64_t step = grid.stride(a);
        const std::int64_t lines = total / m;

#pragma omp parallel
        {
            std::vector<std::int64_t> g(static_cast<std::size_t>(m)), out(static_cast<std::size_t>(m));
            std::vector<std::int64_t> s(static_cast<std::size_t>(m)), t(static_cast<std::size_t>(m));
#pragma omp for schedule(static)
            for (std::int64_t line = 0; line < lines; ++line) {
                // base index of this line: distribute `line` over all axes != a
                std::int64_t base = 0, rem = line;
                for (int b = 0; b < n; ++b) {
                    if (b == a) continue;
                    std::int64_t e = grid.extent(b);
                    base += (rem % e) * grid.stride(b);
                    rem /= e;
                }
                for (std::int64_t i = 0; i < m; ++i) g[std::size_t(i)] = dist[std::size_t(base + i * step)];
                envelope_scan(g.data(), out.data(), m, s.data(), t.data());
                for (std::int64_t i = 0; i < m; ++i) dist[std::size_t(base + i * step)] = out[std::size_t(i)];
            }
        }
    }

    std::vector<std::int32_t> result(static_cast<std::size_t>(total));
    for (std::int64_t i = 0; i < total; ++i)
        result[std::size_t(i)] = dist[std::size_t(i)] >= clamp ? kDistInf : std::int32_t(dist[std::size_t(i)]);
    return result;
}

std::vector<std::int32_t> chebyshev_dt_reference(const DomainMask& mask) {
    const GridSpec& grid = mask.grid();
    const std::int64_t total = grid.total_cells();
    const int n = grid.dim();
    std::vector<std::int32_t> out(std::size_t(total), kDistInf);
    const auto& closed = mask.closed_cells();
    for (std::int64_t i = 0; i < total; ++i) {
        CellCoord ci = grid.decode(i);
        std::int64_t best = kDistInf;
        for (CellIndex j : closed) {
            CellCoord cj = grid.decode(j);
            std::int64_t d = 0;
            for (int a = 0; a < n; ++a) d = std::max(d, std::abs(ci[a] - cj[a]));
            best = std::min(best, d);
        }
        out[std::size_t(i)] = std::int32_t(best);
    }
    return out;
}

BoxCounter::BoxCounter(const GridSpec& grid, const std::vector<std::uint8_t>& state, std::uint8_t min_state)
    : grid_(&grid) {
    const int n = grid.dim();
    pext_.resize(std::size_t(n));
    std::int64_t ptotal = 1;
    for (int a = 0; a < n; ++a) {
        pext_[std::size_t(a)] = grid.extent(a) + 1;
        ptotal *= pext_[std::size_t(a)];
    }
    pstride_.assign(std::size_t(n), 1);
    for (int a = n - 2; a >= 0; --a)
        pstride_[std::size_t(a)] = pstride_[std::size_t(a) + 1] * pext_[std::size_t(a) + 1];
    prefix_.assign(std::size_t(ptotal), 0);

    // seed with indicators at shifted positions, then sweep per axis
    for (std::int64_t i = 0; i < grid.total_cells(); ++i) {
        if (state[std::size_t(i)] < min_state) continue;
        CellCoord c = grid_->decode(i);
        std::int64_t p = 0;
        for (int a = 0; a < n; ++a) p += (c[a] + 1) * pstride_[std::size_t(a)];
        prefix_[std::size_t(p)] = 1;
    }
    for (int a = 0; a < n; ++a) {
        const std::int64_t m = pext_[std::size_t(a)];
        const std::int64_t step = pstride_[std::size_t(a)];
        const std::int64_t lines = ptotal / m;
        for (std::int64_t line = 0; line < lines; ++line) {
            std::int64_t base = 0, rem = line;
            for (int b = 0; b < n; ++b) {
                if (b == a) continue;
                base += (rem % pext_[std::size_t(b)]) * pstride_[std::size_t(b)];
                rem /= pext_[std::size_t(b)];
            }
            for (std::int64_t i = 1; i < m; ++i)
                prefix_[std::size_t(base + i * step)] += prefix_[std::size_t(base + (i - 1) * step)];
        }
    }
}

std::int64_t BoxCounter::at(const CellCoord& c) const {
    std::int64_t p = 0;
    for (int a = 0; a < c.dim; ++a) p += c[a] * pstride_[std::size_t(a)];
    return prefix_[std::size_t(p)];
}

std::int64_t BoxCounter::count(const CellCoord& lo, const CellCoord& hi) const {
    const int n = grid_->dim();
    CellCoord l = lo, h = hi;
    for (int a = 0; a < n; ++a) {
        l[a] = std::max<std::int64_t>(l[a], 0);
        h[a] = std::min<std::int64_t>(h[a] + 1, grid_->extent(a)); // exclusive
        if (h[a] <= l[a]) return 0;
    }
    // inclusion-exclusion over corners
    std::int64_t sum = 0;
    for (int corner = 0; corner < (1 << n); ++corner) {
        CellCoord c;
        c.dim = n;
        int parity = 0;
        for (int a = 0; a < n; ++a) {
            if (corner & (1 << a)) {
                c[a] = h[a];
            } else {
                c[a] = l[a];
                ++parity;
            }
        }
        sum += (parity % 2 == 0 ? 1 : -1) * at(c);
    }
    return sum;
}

} // namespace sobex
