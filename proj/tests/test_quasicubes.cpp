#include <doctest.h>

#include <cmath>

#include "sobex/errors.hpp"
#include "sobex/harness.hpp"
#include "sobex/quasicubes.hpp"

using namespace sobex;

namespace {

std::shared_ptr<const WhitneyFamily> family_for(const std::string& domain, double h) {
    auto dom = resolve_domain(domain, h);
    DomainInstance di = build_domain(dom, h);
    std::int64_t E = di.grid.extent(0);
    int L = 0;
    while ((std::int64_t(1) << (L + 1)) <= E) ++L;
    return std::make_shared<const WhitneyFamily>(
        WhitneyFamily::decompose(di.mask, di.window, 0, L - 1));
}

} // namespace

TEST_CASE("half-plane: quasi-cubes exist with finite gamma1 across refinements") {
    double g1_prev = -1.0;
    int g2_prev = -1;
    for (double h : {1.0 / 16.0, 1.0 / 32.0}) {
        auto fam = family_for("half_plane", h);
        QuasiCubeFamily qf = QuasiCubeFamily::build(fam, 0.5, 0.5);
        const auto& cert = qf.certification();
        CHECK(cert.empty_quasicubes == 0);
        CHECK(cert.certified_count > 0);
        CHECK(cert.gamma1 > 0.0);
        CHECK(cert.gamma1 < 1e4);
        if (g1_prev > 0.0) CHECK(std::abs(cert.gamma1 - g1_prev) / g1_prev <= 0.6);
        g1_prev = cert.gamma1;
        // overlap small and constant across refinements; the exact counting
        // oracle measures 11 (the lexicographic a_K tie-break concentrates
        // neighboring quasi-cubes on shared wall cells)
        CHECK(cert.gamma2 == 11);
        if (g2_prev >= 0) CHECK(cert.gamma2 == g2_prev);
        g2_prev = cert.gamma2;
    }
}

TEST_CASE("overlap histogram double-counting identity") {
    auto fam = family_for("unit_square", 1.0 / 32.0);
    QuasiCubeFamily qf = QuasiCubeFamily::build(fam, 0.5, 0.25);
    auto hist = qf.overlap_histogram();
    std::int64_t weighted = 0, cells = 0;
    for (const auto& [count, num] : hist) {
        weighted += std::int64_t(count) * num;
        cells += num;
    }
    // the histogram counts the non-edge quasi-cubes
    std::int64_t member_total = 0;
    for (std::int32_t id = 0; id < std::int32_t(fam->cubes().size()); ++id)
        if (!fam->cube(id).window_edge)
            member_total += std::int64_t(qf.entry(id).members.size());
    CHECK(weighted == member_total);
    CHECK(cells == fam->mask().closed_count());
    CHECK(hist.rbegin()->first == qf.gamma2());
}

TEST_CASE("delta_S = 0 gives the all-empty family") {
    auto fam = family_for("unit_square", 1.0 / 32.0);
    QuasiCubeFamily qf = QuasiCubeFamily::build(fam, 0.5, 0.0);
    for (const auto& e : qf.entries()) {
        CHECK(!e.small);
        CHECK(e.members.empty());
    }
    auto hist = qf.overlap_histogram();
    REQUIRE(hist.size() == 1);
    CHECK(hist.begin()->first == 0);
    CHECK(hist.begin()->second == fam->mask().closed_count());
}

TEST_CASE("cubes past delta_S keep empty H_Q") {
    auto fam = family_for("unit_square", 1.0 / 32.0);
    const double delta_s = 0.25;
    QuasiCubeFamily qf = QuasiCubeFamily::build(fam, 0.5, delta_s);
    for (std::int32_t id = 0; id < std::int32_t(fam->cubes().size()); ++id) {
        if (fam->cube_diam(id) > delta_s) {
            CHECK(qf.entry(id).members.empty());
            CHECK(!qf.entry(id).small);
        } else {
            CHECK(!qf.entry(id).members.empty());
        }
    }
}

TEST_CASE("Theorem (i): members lie in 10Q and in S; reflected cube inside 10K") {
    auto fam = family_for("unit_disk", 1.0 / 32.0);
    QuasiCubeFamily qf = QuasiCubeFamily::build(fam, 0.5, 0.25);
    const GridSpec& g = fam->mask().grid();
    for (std::int32_t id = 0; id < std::int32_t(fam->cubes().size()); ++id) {
        const auto& e = qf.entry(id);
        if (!e.small) continue;
        Cube big = fam->cube_geometry(id).dilated(10.0);
        for (CellIndex m : e.members) {
            auto c = g.cell_center(m);
            CHECK(big.contains(c));
            CHECK(fam->mask().is_closed(m));
        }
        Cube refl = qf.reflected_cube(id);
        // Q(a_K, r_K) inside 10K up to the half-cell discretization of a_K
        double gap = dist_inf(refl.center, fam->cube_center(id));
        CHECK(gap <= 9.0 * fam->cube_half_side(id) + 0.5 * g.spacing() + 1e-12);
    }
}

TEST_CASE("H_Q disjoint from every subtracted K_eps") {
    auto fam = family_for("unit_square", 1.0 / 32.0);
    QuasiCubeFamily qf = QuasiCubeFamily::build(fam, 0.5, 0.25);
    CHECK(qf.certification().disjoint_failures == 0);
    const GridSpec& g = fam->mask().grid();
    // spot re-check with cube geometry
    for (std::int32_t id = 0; id < std::int32_t(fam->cubes().size()); id += 5) {
        const auto& e = qf.entry(id);
        if (!e.small || e.floor_exempt) continue;
        for (std::int32_t kid : e.removals) {
            Cube keps = qf.reflected_cube(kid);
            for (CellIndex m : e.members) {
                auto c = g.cell_center(m);
                CHECK(!keps.contains(c, 1.0 - 1e-12));
            }
        }
    }
}

TEST_CASE("well-definedness across epsilon in {1/4, 1/2, 1}") {
    auto fam = family_for("unit_square", 1.0 / 32.0);
    for (double eps : {0.25, 0.5}) {
        QuasiCubeFamily qf = QuasiCubeFamily::build(fam, eps, 0.25);
        CHECK(qf.certification().containment_failures == 0);
        CHECK(qf.certification().disjoint_failures == 0);
        CHECK(qf.gamma2() >= 1);
    }
    // eps = 1 (the paper wants eps small): the construction stays well
    // defined but may legitimately flag emptiness
    try {
        QuasiCubeFamily qf = QuasiCubeFamily::build(fam, 1.0, 0.25);
        CHECK(qf.certification().containment_failures == 0);
    } catch (const regularity_violation_error& e) {
        CHECK(!e.cube_ids.empty());
    }
}

TEST_CASE("gamma1 drift across refinement on the square") {
    auto f1 = family_for("unit_square", 1.0 / 32.0);
    auto f2 = family_for("unit_square", 1.0 / 64.0);
    QuasiCubeFamily q1 = QuasiCubeFamily::build(f1, 0.5, 0.25);
    QuasiCubeFamily q2 = QuasiCubeFamily::build(f2, 0.5, 0.25);
    CHECK(std::abs(q2.gamma1() - q1.gamma1()) / q1.gamma1() <= 0.25);
}

TEST_CASE("slit with a true S-gap: open-cell counting degenerates near the slit") {
    const double h = 1.0 / 32.0;
    auto fam = family_for("slit_square_wide", h);
    // closed counting builds fine
    QuasiCubeFamily ok = QuasiCubeFamily::build(fam, 0.5, 0.25, SCellSource::Closed);
    CHECK(ok.certification().empty_quasicubes == 0);
    // open counting must flag cubes near the slit
    try {
        QuasiCubeFamily::build(fam, 0.5, 0.25, SCellSource::Open);
        FAIL("expected regularity_violation_error");
    } catch (const regularity_violation_error& e) {
        REQUIRE(!e.cube_ids.empty());
        bool near_slit = false;
        for (std::int32_t id : e.cube_ids) {
            auto c = fam->cube_center(id);
            if (std::abs(c[1] - 0.5) < 0.15 && c[0] > -0.2 && c[0] < 0.7) near_slit = true;
        }
        CHECK(near_slit);
    }
}
