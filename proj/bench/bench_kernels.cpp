// Timing comparison between the serial reference implementations and the
// OpenMP kernels they certify. Sizes are chosen so the brute-force
// references finish in seconds.
#include <chrono>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sobex/distance.hpp"
#include "sobex/harness.hpp"
#include "sobex/local_approx.hpp"
#include "sobex/rng.hpp"

using namespace sobex;
using clock_type = std::chrono::high_resolution_clock;

namespace {

double ms_since(clock_type::time_point t0) {
    return std::chrono::duration<double, std::milli>(clock_type::now() - t0).count();
}

} // namespace

int main() {
#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (no OpenMP)\n");
#endif

    // Chebyshev distance transform: envelope scans vs brute force
    {
        const double h = 1.0 / 64.0;
        auto dom = resolve_domain("unit_disk", h);
        DomainInstance di = build_domain(dom, h);
        auto t0 = clock_type::now();
        auto fast = chebyshev_dt(*di.mask);
        double t_fast = ms_since(t0);
        t0 = clock_type::now();
        auto ref = chebyshev_dt_reference(*di.mask);
        double t_ref = ms_since(t0);
        std::int64_t diff = 0;
        for (std::size_t i = 0; i < fast.size(); ++i) diff += fast[i] != ref[i];
        std::printf("chebyshev_dt      %8lld cells  kernel %8.1f ms  reference %8.1f ms  mismatches %lld\n",
                    (long long)di.grid.total_cells(), t_fast, t_ref, (long long)diff);
    }

    // sharp maximal: sliding histogram vs exact median/SAD
    {
        GridSpec grid({0.0, 0.0}, 1.0 / 64.0, {128, 128});
        auto mask = make_full_mask(grid);
        ScalarField u(grid, mask);
        Rng rng(7);
        for (CellIndex i = 0; i < grid.total_cells(); ++i) {
            CellCoord c = grid.decode(i);
            double x = grid.center_coord(c[0], 0), y = grid.center_coord(c[1], 1);
            u[i] = std::sin(5 * x) * std::cos(4 * y) + 0.1 * rng.uniform(-1, 1);
        }
        auto radii = dyadic_radii(grid, 2.0);
        auto t0 = clock_type::now();
        ScalarField fast = sharp_maximal(u, *mask, radii, SharpMethod::Histogram);
        double t_fast = ms_since(t0);
        t0 = clock_type::now();
        ScalarField slow = sharp_maximal(u, *mask, radii, SharpMethod::Exact);
        double t_slow = ms_since(t0);
        double worst = 0.0, scale = 0.0;
        for (CellIndex i = 0; i < grid.total_cells(); ++i) {
            worst = std::max(worst, std::abs(fast[i] - slow[i]));
            scale = std::max(scale, slow[i]);
        }
        std::printf("sharp_maximal     %8lld cells  kernel %8.1f ms  reference %8.1f ms  rel dev %.2e\n",
                    (long long)grid.total_cells(), t_fast, t_slow, worst / scale);
    }

    // best constant: golden section vs brute-force scan
    {
        GridSpec grid({0.0}, 1.0 / 4096.0, {4096});
        ScalarField u(grid);
        Rng rng(9);
        for (auto& v : u.values) v = rng.uniform(-1, 1);
        std::vector<CellIndex> region(4096);
        for (CellIndex i = 0; i < 4096; ++i) region[std::size_t(i)] = i;
        auto t0 = clock_type::now();
        auto fast = best_constant(u, region, 1.7);
        double t_fast = ms_since(t0);
        t0 = clock_type::now();
        auto slow = best_constant_bruteforce(u, region, 1.7, 10000);
        double t_slow = ms_since(t0);
        std::printf("best_constant     %8d cells  kernel %8.1f ms  reference %8.1f ms  rel dev %.2e\n",
                    4096, t_fast, t_slow, std::abs(fast.error - slow.error) / slow.error);
    }

    // extension apply: identity + sparse rows over the window
    {
        const double h = 1.0 / 64.0;
        Pipeline p = build_pipeline(resolve_domain("unit_square", h), h, 0.5, 0.25, 1);
        ScalarField u(p.dom.grid, p.dom.mask);
        Rng rng(3);
        for (CellIndex i : p.dom.mask->closed_cells()) u[i] = rng.uniform(-1, 1);
        auto t0 = clock_type::now();
        ScalarField eu = p.map->apply(u);
        double t_apply = ms_since(t0);
        std::printf("extension apply   %8lld rows   kernel %8.1f ms  nnz %lld\n",
                    (long long)p.map->stats().rows, t_apply, (long long)p.map->stats().nnz);
    }
    return 0;
}
