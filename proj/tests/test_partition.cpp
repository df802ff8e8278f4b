#include <doctest.h>

#include <cmath>

#include "sobex/harness.hpp"
#include "sobex/partition.hpp"
#include "sobex/rng.hpp"

using namespace sobex;

namespace {

std::shared_ptr<const WhitneyFamily> square_family(double h) {
    auto dom = resolve_domain("unit_square", h);
    DomainInstance di = build_domain(dom, h);
    std::int64_t E = di.grid.extent(0);
    int L = 0;
    while ((std::int64_t(1) << (L + 1)) <= E) ++L;
    return std::make_shared<const WhitneyFamily>(
        WhitneyFamily::decompose(di.mask, di.window, 0, L - 1));
}

// random point in a covered cell at least two cells off S
bool random_probe(const WhitneyFamily& fam, Rng& rng, std::array<double, kMaxDim>& x) {
    const GridSpec& g = fam.mask().grid();
    CellIndex ci = CellIndex(rng.next_below(std::uint64_t(g.total_cells())));
    if (fam.mask().is_closed(ci) || fam.dt()[std::size_t(ci)] < 2) return false;
    if (!fam.cell_is_covered(ci)) return false;
    CellCoord c = g.decode(ci);
    for (int a = 0; a < g.dim(); ++a)
        x[std::size_t(a)] = g.center_coord(c[a], a) + (rng.next_double() - 0.5) * g.spacing();
    return true;
}

} // namespace

TEST_CASE("bump profile: plateau, support, smooth ramp") {
    CHECK(bump_profile(0.0) == 1.0);
    CHECK(bump_profile(1.0) == 1.0);
    CHECK(bump_profile(-1.0) == 1.0);
    CHECK(bump_profile(9.0 / 8.0) == 0.0);
    CHECK(bump_profile(-2.0) == 0.0);
    CHECK(bump_profile(1.0625) == doctest::Approx(0.5));
    // derivative matches finite differences on the ramp
    for (double t : {1.01, 1.05, 1.09, 1.118, -1.03}) {
        double fd = (bump_profile(t + 1e-7) - bump_profile(t - 1e-7)) / 2e-7;
        CHECK(bump_profile_derivative(t) == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("partition of unity sums to 1 off S") {
    auto fam = square_family(1.0 / 32.0);
    BumpBasis basis = BumpBasis::build(fam, 2048, 5);
    Rng rng(100);
    int done = 0;
    double worst = 0.0;
    while (done < 3000) {
        std::array<double, kMaxDim> x;
        if (!random_probe(*fam, rng, x)) continue;
        auto vals = basis.evaluate(std::span<const double>(x.data(), 2));
        REQUIRE(!vals.empty());
        double s = 0.0;
        for (const auto& pv : vals) {
            CHECK(pv.phi >= 0.0);
            CHECK(pv.phi <= 1.0 + 1e-14);
            s += pv.phi;
        }
        worst = std::max(worst, std::abs(s - 1.0));
        ++done;
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("phi is exactly 1 at a cube center no other Q* reaches") {
    auto fam = square_family(1.0 / 32.0);
    BumpBasis basis = BumpBasis::build(fam, 512, 5);
    bool tested = false;
    for (std::int32_t id = 0; id < std::int32_t(fam->cubes().size()) && !tested; ++id) {
        const WhitneyCube& q = fam->cube(id);
        if (q.frontier) continue;
        bool all_geq = true;
        for (std::int32_t nb : q.neighbors)
            if (fam->cube(nb).width < q.width) all_geq = false;
        if (!all_geq) continue;
        auto ctr = fam->cube_center(id);
        auto got = fam->locate(ctr);
        if (got.size() != 1) continue; // another Q* reaches the center
        auto vals = basis.evaluate(ctr);
        REQUIRE(vals.size() == 1);
        CHECK(vals[0].cube_id == id);
        CHECK(vals[0].phi == doctest::Approx(1.0).epsilon(1e-14));
        tested = true;
    }
    CHECK(tested);
}

TEST_CASE("support size bounded by the star overlap constant") {
    auto fam = square_family(1.0 / 32.0);
    BumpBasis basis = BumpBasis::build(fam, 512, 5);
    Rng rng(200);
    int done = 0;
    while (done < 1000) {
        std::array<double, kMaxDim> x;
        if (!random_probe(*fam, rng, x)) continue;
        auto vals = basis.evaluate(std::span<const double>(x.data(), 2));
        CHECK(std::int64_t(vals.size()) <= fam->certification().star_overlap_N);
        ++done;
    }
}

TEST_CASE("evaluation is continuous across cube faces") {
    auto fam = square_family(1.0 / 32.0);
    BumpBasis basis = BumpBasis::build(fam, 512, 5);
    const double h = fam->spacing();
    int tested = 0;
    for (std::int32_t id = 0; id < std::int32_t(fam->cubes().size()) && tested < 50; ++id) {
        const WhitneyCube& q = fam->cube(id);
        if (q.frontier || q.window_edge) continue;
        auto ctr = fam->cube_center(id);
        // face midpoint along axis 0
        double face = ctr[0] + fam->cube_half_side(id);
        double eps = 1e-6 * h;
        double xa[2] = {face - eps, ctr[1]};
        double xb[2] = {face + eps, ctr[1]};
        const GridSpec& g = fam->mask().grid();
        CellCoord ca = g.cell_of_point(std::span<const double>(xa, 2));
        CellCoord cb = g.cell_of_point(std::span<const double>(xb, 2));
        if (!g.in_bounds(ca) || !g.in_bounds(cb)) continue;
        if (fam->mask().is_closed(g.linear(ca)) || fam->mask().is_closed(g.linear(cb))) continue;
        auto va = basis.evaluate(std::span<const double>(xa, 2));
        auto vb = basis.evaluate(std::span<const double>(xb, 2));
        // compare per-cube values where both sides have the cube
        for (const auto& pa : va)
            for (const auto& pb : vb)
                if (pa.cube_id == pb.cube_id) CHECK(std::abs(pa.phi - pb.phi) <= 1e-9);
        ++tested;
    }
    CHECK(tested > 0);
}

TEST_CASE("gradient bound constant: FD oracle agrees and is stable under refinement") {
    auto fam1 = square_family(1.0 / 16.0);
    auto fam2 = square_family(1.0 / 32.0);
    BumpBasis b1 = BumpBasis::build(fam1, 1024, 5);
    BumpBasis b2 = BumpBasis::build(fam2, 1024, 5);

    // finite-difference probe oracle for |grad phi_Q| * diam Q
    auto fd_constant = [](const BumpBasis& basis, Rng rng) {
        const WhitneyFamily& fam = basis.family();
        double best = 0.0;
        const std::size_t sample = std::min<std::size_t>(fam.cubes().size(), 128);
        for (std::size_t s = 0; s < sample; ++s) {
            std::int32_t id = std::int32_t(rng.next_below(fam.cubes().size()));
            auto ctr = fam.cube_center(id);
            double r = fam.cube_half_side(id);
            for (int probe = 0; probe < 16; ++probe) {
                std::array<double, kMaxDim> x;
                for (int a = 0; a < 2; ++a)
                    x[std::size_t(a)] = ctr[std::size_t(a)] + rng.uniform(-1.1, 1.1) * r;
                const GridSpec& g = fam.mask().grid();
                std::span<const double> xs(x.data(), 2);
                CellCoord c = g.cell_of_point(xs);
                if (!g.in_bounds(c) || fam.mask().is_closed(g.linear(c))) continue;
                const double step = 1e-6 * r;
                for (int a = 0; a < 2; ++a) {
                    auto phi_of = [&](double delta) {
                        std::array<double, kMaxDim> y = x;
                        y[std::size_t(a)] += delta;
                        auto vals = basis.evaluate(std::span<const double>(y.data(), 2));
                        for (const auto& pv : vals)
                            if (pv.cube_id == id) return pv.phi;
                        return 0.0;
                    };
                    double g1 = (phi_of(step) - phi_of(-step)) / (2.0 * step);
                    best = std::max(best, std::abs(g1) * fam.cube_diam(id));
                }
            }
        }
        return best;
    };
    double c1 = fd_constant(b1, Rng(31));
    double c2 = fd_constant(b2, Rng(32));
    // FD oracle within 25% of the analytically measured constant
    CHECK(c1 <= b1.derivative_bound_constant() * 1.25);
    CHECK(c1 >= b1.derivative_bound_constant() * 0.5);
    // stability across refinement
    CHECK(std::abs(c2 - c1) / c1 <= 0.25);
    CHECK(std::abs(b2.derivative_bound_constant() - b1.derivative_bound_constant()) /
              b1.derivative_bound_constant() <=
          0.12);
}
