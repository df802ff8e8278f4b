#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "sobex/density.hpp"
#include "sobex/errors.hpp"
#include "sobex/harness.hpp"
#include "sobex/mask.hpp"

using namespace sobex;

TEST_CASE("cube dilation and diameter") {
    Cube q({0.25, -1.0}, 0.5);
    CHECK(q.diam() == doctest::Approx(1.0));
    Cube qs = q.dilated(9.0 / 8.0);
    CHECK(qs.half_side == doctest::Approx(0.5 * 9.0 / 8.0));
    CHECK(qs.center == q.center);
    double p[2] = {0.25 + 0.55, -1.0};
    CHECK(!q.contains(std::span<const double>(p, 2)));
    CHECK(qs.contains(std::span<const double>(p, 2)));
}

TEST_CASE("rasterize unit square on h=1/8 grid gives 64 open cells") {
    auto shape = parse_shape_json(R"({"prim":"box","lo":[0,0],"hi":[1,1]})");
    GridSpec grid({-0.5, -0.5}, 1.0 / 8.0, {16, 16});
    DomainMask mask = rasterize(*shape, grid);
    CHECK(mask.open_count() == 64);
    // closed = open plus one full neighbor layer
    CHECK(mask.closed_count() == 10 * 10);
    for (CellIndex i : mask.closed_cells()) {
        if (mask.is_open(i)) continue;
        // every layer cell touches an open cell
        CellCoord c = grid.decode(i);
        bool touches = false;
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy) {
                CellCoord nb = c;
                nb[0] += dx;
                nb[1] += dy;
                if (grid.in_bounds(nb) && mask.is_open(grid.linear(nb))) touches = true;
            }
        CHECK(touches);
    }
}

TEST_CASE("slit disk rasterization excludes the slit cell rows") {
    const double h = 1.0 / 64.0;
    auto dom = resolve_domain("slit_disk", h);
    DomainInstance di = build_domain(dom, h);
    const GridSpec& g = di.grid;
    // cells along y = +-h/2 with 0 < x < 0.9 must not be open
    std::int64_t excluded = 0, above_open = 0;
    for (CellIndex i = 0; i < g.total_cells(); ++i) {
        CellCoord c = g.decode(i);
        double x = g.center_coord(c[0], 0), y = g.center_coord(c[1], 1);
        if (x > 0.05 && x < 0.9 && std::abs(y) < h) {
            CHECK(!di.mask->is_open(i));
            ++excluded;
        }
        if (x > 0.05 && x < 0.9 && y > 2.4 * h && y < 4 * h && di.mask->is_open(i)) ++above_open;
    }
    CHECK(excluded > 20);
    CHECK(above_open > 20);
}

TEST_CASE("empty intersection raises empty-domain error") {
    auto shape = parse_shape_json(
        R"({"op":"intersection","args":[{"prim":"box","lo":[0,0],"hi":[1,1]},{"prim":"box","lo":[2,2],"hi":[3,3]}]})");
    GridSpec grid({-1, -1}, 1.0 / 16.0, {80, 80});
    CHECK_THROWS_AS(rasterize(*shape, grid), empty_domain_error);
}

TEST_CASE("mask binary round-trip and PGM export") {
    const double h = 1.0 / 32.0;
    auto dom = resolve_domain("unit_disk", h);
    DomainInstance di = build_domain(dom, h);
    std::string tmp = (std::filesystem::temp_directory_path() / "sobex_mask.bin").string();
    write_mask(*di.mask, tmp);
    DomainMask back = read_mask(tmp);
    CHECK(back.state() == di.mask->state());
    CHECK(back.grid() == di.mask->grid());
    std::string pgm = (std::filesystem::temp_directory_path() / "sobex_mask.pgm").string();
    write_mask_pgm(*di.mask, pgm);
    CHECK(std::filesystem::file_size(pgm) > 100);
    std::filesystem::remove(tmp);
    std::filesystem::remove(pgm);
}

TEST_CASE("measure_density: full window has ratio 1 in the interior, <= 4 at corners") {
    GridSpec grid({0, 0}, 1.0 / 32.0, {64, 64});
    auto mask = make_full_mask(grid);
    AhlforsReport rep = measure_density(*mask, 0.5, 0, Rng(3));
    CHECK(rep.C_A >= 1.0);
    CHECK(rep.C_A <= 4.0 + 1e-9);
    bool found_unit = false;
    for (const auto& s : rep.samples)
        if (s.ratio == 1.0) found_unit = true;
    CHECK(found_unit);
}

TEST_CASE("measure_density: unit interval interior ratio 1") {
    GridSpec grid({0.0}, 1.0 / 64.0, {64});
    auto mask = make_full_mask(grid);
    AhlforsReport rep = measure_density(*mask, 8.0 / 64.0, 0, Rng(4));
    double c_small = rep.c_a_at(2.0 / 64.0);
    CHECK(c_small >= 1.0);
    CHECK(c_small <= 2.0); // only endpoint cells overshoot at tiny radius
}

TEST_CASE("measure_density monotone in delta") {
    const double h = 1.0 / 64.0;
    auto dom = resolve_domain("unit_disk", h);
    DomainInstance di = build_domain(dom, h);
    AhlforsReport rep = measure_density(*di.mask, 0.5, 4096, Rng(5));
    double prev = 0.0;
    for (double d = 2 * h; d <= 0.5; d *= 2) {
        double c = rep.c_a_at(d);
        CHECK(c >= prev - 1e-12);
        prev = c;
    }
}

TEST_CASE("cusp domain: C_A grows under refinement toward the tip") {
    // outward cusp {0<x<1, 0<y<x^4}: the density ratio near the tip grows
    // without bound as the resolvable scale shrinks
    std::vector<double> cas;
    for (double h : {1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0}) {
        auto dom = resolve_domain("cusp", h);
        DomainInstance di = build_domain(dom, h);
        AhlforsReport rep = measure_density(*di.mask, 1.0 / 8.0, 0, Rng(6));
        cas.push_back(rep.C_A);
    }
    CHECK(cas[1] > cas[0]);
    CHECK(cas[2] > cas[1]);
}

TEST_CASE("quasiconvexity: convex domain stays near 1") {
    const double h = 1.0 / 128.0;
    auto shape = parse_shape_json(R"({"prim":"box","lo":[0,0],"hi":[1,1]})");
    GridSpec grid = make_window_grid(std::vector<double>{0.5, 0.5}, h, 256);
    auto mask = std::make_shared<DomainMask>(rasterize(*shape, grid));
    QuasiconvexityReport rep = quasiconvexity(*mask, 0.4, 200, Rng(7));
    CHECK(rep.C_q >= 1.0 - 1e-12);
    CHECK(rep.C_q <= 1.1);
    for (const auto& w : rep.witness_pairs) {
        double slack = 2.0 * h / w.straight_distance;
        CHECK(w.geodesic_length / w.straight_distance >= 1.0 - slack);
    }
}

TEST_CASE("quasiconvexity: slit disk geodesic rounds the tip") {
    const double h = 1.0 / 64.0;
    auto dom = resolve_domain("slit_disk", h);
    DomainInstance di = build_domain(dom, h);
    const GridSpec& g = di.grid;
    const double delta = 4.0 * h;
    auto cell_at = [&](double x, double y) {
        double p[2] = {x, y};
        CellCoord c = g.cell_of_point(std::span<const double>(p, 2));
        return g.linear(c);
    };
    CellIndex a = cell_at(0.5, delta), b = cell_at(0.5, -delta);
    REQUIRE(di.mask->is_open(a));
    REQUIRE(di.mask->is_open(b));
    double geo = grid_geodesic(*di.mask, a, b);
    // oracle: continuum geodesic rounds the tip at the origin,
    // length ~ 2 * sqrt(0.25 + delta^2); the grid metric over-estimates <= 8%
    double oracle = 2.0 * std::sqrt(0.25 + delta * delta);
    CHECK(geo >= 0.98 * oracle);
    CHECK(geo <= 1.10 * oracle + 6.0 * h);
}

TEST_CASE("quasiconvexity ratios invariant under rigid motion (within grid slack)") {
    const double h = 1.0 / 64.0;
    auto s1 = parse_shape_json(R"({"op":"difference","args":[
        {"prim":"box","lo":[0,0],"hi":[1,1]},
        {"prim":"box","lo":[0.4,-0.1],"hi":[0.6,0.5]}]})");
    auto s2 = parse_shape_json(R"({"op":"difference","args":[
        {"prim":"box","lo":[0.37,-0.21],"hi":[1.37,0.79]},
        {"prim":"box","lo":[0.77,-0.31],"hi":[0.97,0.29]}]})");
    GridSpec g1 = make_window_grid(std::vector<double>{0.5, 0.5}, h, 128);
    GridSpec g2 = make_window_grid(std::vector<double>{0.87, 0.29}, h, 128);
    auto m1 = std::make_shared<DomainMask>(rasterize(*s1, g1));
    auto m2 = std::make_shared<DomainMask>(rasterize(*s2, g2));
    QuasiconvexityReport r1 = quasiconvexity(*m1, 0.3, 300, Rng(11));
    QuasiconvexityReport r2 = quasiconvexity(*m2, 0.3, 300, Rng(11));
    CHECK(std::abs(r1.C_q - r2.C_q) <= 0.35 * std::max(r1.C_q, r2.C_q));
}
