// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Thresholds are pinned here; runs print the measured numbers so
// red results carry their evidence.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "sobex/errors.hpp"
#include "sobex/harness.hpp"
#include "sobex/rng.hpp"
#include "sobex/suites.hpp"

using namespace sobex;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int idx, const char* name, bool pass, const std::string& detail) {
    std::printf("criterion %2d [%s]: %s  (%s)\n", idx, name, pass ? "PASS" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::shared_ptr<const WhitneyFamily> decompose_domain(const std::string& name, double h,
                                                      DomainInstance* out_di = nullptr) {
    auto dom = resolve_domain(name, h);
    DomainInstance di = build_domain(dom, h);
    std::int64_t E = di.grid.extent(0);
    int L = 0;
    while ((std::int64_t(1) << (L + 1)) <= E) ++L;
    auto fam = std::make_shared<const WhitneyFamily>(
        WhitneyFamily::decompose(di.mask, di.window, 0, L - 1));
    if (out_di) *out_di = di;
    return fam;
}

std::vector<std::pair<std::string, ScalarField>> sampled_suite(
    const std::vector<Generator2D>& gens, const DomainInstance& di) {
    std::vector<std::pair<std::string, ScalarField>> out;
    for (const auto& g : gens) out.push_back({g.name, sample_field(g, di.grid, di.mask)});
    return out;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// --- criterion 1: Whitney certification ---------------------------------
void criterion1() {
    bool pass = true;
    std::ostringstream detail;
    for (const std::string& name : {std::string("point"), std::string("segment"),
                                    std::string("unit_square"), std::string("unit_disk")}) {
        int n_prev = -1;
        double fine_time = 0.0;
        for (double h : {1.0 / 128.0, 1.0 / 256.0}) {
            auto t0 = clock_type::now();
            auto fam = decompose_domain(name, h);
            double dt = seconds_since(t0);
            if (h == 1.0 / 256.0) fine_time = dt;
            const auto& cert = fam->certification();
            if (cert.lower_bound_failures || cert.upper_bound_failures ||
                cert.adjacency_ratio_failures || !cert.partition_identity)
                pass = false;
            if (n_prev >= 0 && cert.point_overlap_N != n_prev) pass = false;
            n_prev = cert.point_overlap_N;
        }
        if (fine_time >= 10.0) pass = false;
        detail << name << " N=" << n_prev << " t=" << std::fixed << fine_time << "s ";
    }
    report(1, "whitney certification", pass, detail.str());
}

// --- criterion 2: partition certification -------------------------------
void criterion2() {
    bool pass = true;
    std::ostringstream detail;
    std::vector<double> constants;
    for (double h : {1.0 / 64.0, 1.0 / 128.0}) {
        DomainInstance di;
        auto fam = decompose_domain("unit_square", h, &di);
        auto basis = std::make_shared<const BumpBasis>(BumpBasis::build(fam, 4096, 99));
        constants.push_back(basis->derivative_bound_constant());
        Rng rng(2026);
        const GridSpec& g = di.grid;
        double worst = 0.0;
        std::int64_t probes = 0, attempts = 0;
        while (probes < 10000 && attempts < 400000) {
            ++attempts;
            CellIndex ci = CellIndex(rng.next_below(std::uint64_t(g.total_cells())));
            if (di.mask->is_closed(ci) || fam->dt()[std::size_t(ci)] < 2) continue;
            if (!fam->cell_is_covered(ci)) continue;
            CellCoord c = g.decode(ci);
            std::array<double, kMaxDim> x;
            for (int a = 0; a < 2; ++a)
                x[std::size_t(a)] = g.center_coord(c[a], a) + (rng.next_double() - 0.5) * g.spacing();
            auto vals = basis->evaluate(std::span<const double>(x.data(), 2));
            double s = 0.0;
            for (const auto& pv : vals) s += pv.phi;
            worst = std::max(worst, std::abs(s - 1.0));
            ++probes;
        }
        if (probes < 10000 || worst > 1e-10) pass = false;
        detail << "h=1/" << std::llround(1.0 / h) << " resid=" << std::scientific << worst << " ";
    }
    double drift = std::abs(constants[1] - constants[0]) / constants[0];
    if (drift > 0.10) pass = false;
    detail << "grad-const drift=" << std::fixed << drift;
    report(2, "partition of unity", pass, detail.str());
}

// --- criterion 3: quasi-cube certification ------------------------------
void criterion3() {
    bool pass = true;
    std::ostringstream detail;
    for (const std::string& name :
         {std::string("unit_square"), std::string("unit_disk"), std::string("half_plane")}) {
        std::vector<double> g1s;
        for (double h : {1.0 / 64.0, 1.0 / 128.0}) {
            auto fam = decompose_domain(name, h);
            double ds = name == "half_plane" ? 0.5 : 0.25;
            QuasiCubeFamily qf = QuasiCubeFamily::build(fam, 0.5, ds);
            const auto& cert = qf.certification();
            if (cert.containment_failures || cert.disjoint_failures) pass = false; // (i)
            auto hist = qf.overlap_histogram();
            if (hist.rbegin()->first != qf.gamma2()) pass = false; // (iii) exact counting
            g1s.push_back(qf.gamma1());
        }
        double drift = std::abs(g1s[1] - g1s[0]) / g1s[0];
        if (drift >= 0.25) pass = false;
        detail << name << " g1drift=" << std::fixed << drift << " ";
    }
    report(3, "quasi-cubes", pass, detail.str());
}

// --- criterion 4: best-constant oracle equivalence ----------------------
void criterion4() {
    Rng rng(4040);
    GridSpec grid({0.0, 0.0}, 1.0 / 16.0, {16, 16});
    bool pass = true;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        ScalarField u(grid);
        for (auto& v : u.values) v = rng.uniform(-4.0, 4.0);
        std::vector<CellIndex> region;
        std::int64_t count = 1 + std::int64_t(rng.next_below(64));
        for (std::int64_t k = 0; k < count; ++k)
            region.push_back(CellIndex(rng.next_below(std::uint64_t(grid.total_cells()))));
        for (double p : {1.0, 1.5, 2.0, 4.0}) {
            auto fast = best_constant(u, region, p);
            auto slow = best_constant_bruteforce(u, region, p, 10000);
            double rel = std::abs(fast.error - slow.error) / (slow.error + 1e-300);
            if (slow.error == 0.0) rel = std::abs(fast.error);
            worst = std::max(worst, rel);
            if (rel > 1e-6) pass = false;
        }
    }
    std::ostringstream detail;
    detail << "100 regions x p in {1,1.5,2,4}, worst rel err=" << std::scientific << worst;
    report(4, "best-constant oracle", pass, detail.str());
}

// --- criterion 5: Calderon bracket ---------------------------------------
void criterion5() {
    bool pass = true;
    std::ostringstream detail;
    auto gens = suite_smooth_2d();
    std::map<double, std::vector<std::pair<double, double>>> brackets; // p -> per-level (lo,hi)
    double fine_time = 0.0;
    for (double h : {1.0 / 64.0, 1.0 / 128.0}) {
        auto t0 = clock_type::now();
        ResolvedDomain dom = resolve_domain("window", h);
        DomainInstance di = build_domain(dom, h);
        for (double p : {1.5, 2.0, 4.0}) brackets[p].push_back({1e300, 0.0});
        for (const auto& g : gens) {
            ScalarField u = sample_field(g, di.grid, di.mask);
            auto grads = gradient_fields(u, di.mask.get());
            auto radii = dyadic_radii(di.grid, di.mask->closed_diam());
            ScalarField sharp = sharp_maximal(u, *di.mask, radii);
            const auto& cells = di.mask->closed_cells();
            for (double p : {1.5, 2.0, 4.0}) {
                double lp = p_norm(u, cells, p);
                double gsum = 0.0;
                for (const auto& gf : grads) gsum += p_norm(gf, cells, p);
                double w1p = lp + gsum;
                if (w1p <= 0.0) continue;
                double ratio = (lp + p_norm(sharp, cells, p)) / w1p;
                auto& b = brackets[p].back();
                b.first = std::min(b.first, ratio);
                b.second = std::max(b.second, ratio);
            }
        }
        if (h == 1.0 / 128.0) fine_time = seconds_since(t0);
    }
    for (auto& [p, bs] : brackets) {
        double lo_move = std::abs(bs[1].first - bs[0].first) / bs[0].first;
        double hi_move = std::abs(bs[1].second - bs[0].second) / bs[0].second;
        if (lo_move >= 0.25 || hi_move >= 0.25) pass = false;
        detail << "p=" << p << " [" << std::fixed << bs[1].first << "," << bs[1].second
               << "] moves " << lo_move << "/" << hi_move << " ";
    }
    if (fine_time >= 120.0) pass = false;
    detail << "t(1/128)=" << std::fixed << fine_time << "s";
    report(5, "Calderon bracket", pass, detail.str());
}

// --- criterion 6: extension boundedness ----------------------------------
void criterion6() {
    bool pass = true;
    std::ostringstream detail;
    std::vector<double> maxes;
    for (double h : {1.0 / 64.0, 1.0 / 128.0}) {
        Pipeline pipe = build_pipeline(resolve_domain("unit_square", h), h, 0.5, 0.25, 1);
        auto suite = sampled_suite(suite_smooth_2d(), pipe.dom);
        OperatorNormReport rep = operator_norm_study(*pipe.map, suite, 2.0);
        if (!std::isfinite(rep.max_ratio)) pass = false;
        maxes.push_back(rep.max_ratio);
        // restriction exact and L-infinity contraction exact
        for (const auto& [name, u] : suite) {
            ScalarField eu = pipe.map->apply(u);
            for (CellIndex i : pipe.dom.mask->closed_cells())
                if (eu[i] != u[i]) pass = false;
            double mu = 0.0, me = 0.0;
            for (CellIndex i : pipe.dom.mask->closed_cells()) mu = std::max(mu, std::abs(u[i]));
            for (double v : eu.values) me = std::max(me, std::abs(v));
            // convex rows contract exactly in the reals; fp rounding of the
            // weight sums costs at most a few ulp
            if (me > mu * (1.0 + 1e-14)) pass = false;
        }
    }
    double drift = std::abs(maxes[1] - maxes[0]) / maxes[0];
    if (drift >= 0.20) pass = false;
    detail << "max_ratio=" << std::fixed << maxes[0] << "->" << maxes[1] << " drift=" << drift;
    report(6, "extension boundedness", pass, detail.str());
}

// --- criterion 7: non-extension detection --------------------------------
void criterion7() {
    bool pass = true;
    std::ostringstream detail;
    std::vector<double> ratios;
    auto jump = suite_jump_slit(0.5, 0.5);
    DomainInstance fine_di;
    for (double h : {1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0}) {
        Pipeline pipe = build_pipeline(resolve_domain("slit_square", h), h, 0.5, 0.25, 1);
        auto suite = sampled_suite(jump, pipe.dom);
        OperatorNormReport rep = operator_norm_study(*pipe.map, suite, 2.0);
        ratios.push_back(rep.max_ratio);
        if (h == 1.0 / 256.0) fine_di = pipe.dom;
    }
    double total_growth = ratios[2] / ratios[0];
    double step1 = ratios[1] / ratios[0], step2 = ratios[2] / ratios[1];
    if (total_growth < 1.5) pass = false;
    // quasiconvexity across the slit at delta <= 4h on the fine level
    QuasiconvexityReport st = quasiconvexity_straddles(*fine_di.mask, 4, 512);
    if (st.C_q <= 10.0) pass = false;
    detail << "ratio " << std::fixed << ratios[0] << "->" << ratios[1] << "->" << ratios[2]
           << " steps " << step1 << "," << step2 << " total x" << total_growth
           << " straddle C_q=" << st.C_q;
    report(7, "non-extension detection", pass, detail.str());
}

// --- criterion 8: commutation order --------------------------------------
void criterion8() {
    bool pass = true;
    std::vector<double> hs{1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0};
    std::vector<double> sups;
    const Generator2D sin_sin = suite_smooth_2d()[6];
    for (double h : hs) {
        Pipeline p1 = build_pipeline(resolve_domain("unit_interval", h), h, 0.5, 0.25, 1);
        DomainInstance d2 = build_domain(resolve_domain("unit_interval", h), h);
        ProductField u = sample_product(sin_sin, p1.dom.grid, d2.grid, p1.dom.mask, d2.mask);
        ProductField du =
            sample_product_derivative(sin_sin, true, p1.dom.grid, d2.grid, p1.dom.mask, d2.mask);
        sups.push_back(commutation_check(u, du, *p1.map, 0).sup_diff);
    }
    double order = fit_order(hs, sups);
    if (!(order >= 0.9)) pass = false;
    std::ostringstream detail;
    detail << "sup " << std::scientific << sups[0] << "->" << sups[1] << "->" << sups[2]
           << " fitted order=" << std::fixed << order;
    report(8, "commutation", pass, detail.str());
}

// --- criterion 9: product theorem -----------------------------------------
void criterion9() {
    bool pass = true;
    std::ostringstream detail;
    std::vector<double> maxes;
    double coherence_worst = 0.0;
    for (double h : {1.0 / 64.0, 1.0 / 128.0}) {
        Pipeline p1 = build_pipeline(resolve_domain("unit_interval", h), h, 0.5, 0.25, 1);
        Pipeline p2 = build_pipeline(resolve_domain("unit_interval", h), h, 0.5, 0.25, 2);
        double max_ratio = 0.0;
        for (const auto& g : suite_smooth_2d()) {
            ProductField u =
                sample_product(g, p1.dom.grid, p2.dom.grid, p1.dom.mask, p2.dom.mask);
            double den = product_w1p_norm(u, ProductRegion::OpenProduct, 2.0);
            if (den <= 0.0) continue;
            ProductField w = extend_product(u, *p1.map, *p2.map);
            max_ratio = std::max(max_ratio, product_w1p_norm(w, ProductRegion::All, 2.0) / den);
            // restriction exact
            for (CellIndex y : p2.dom.mask->open_cells())
                for (CellIndex x : p1.dom.mask->open_cells())
                    if (w.at(x, y) != u.at(x, y)) pass = false;
            // transpose coherence
            ProductField wt = transpose(w);
            ProductField w2 = extend_product(transpose(u), *p2.map, *p1.map);
            double scale = 0.0, diff = 0.0;
            for (std::size_t k = 0; k < wt.values.size(); ++k) {
                scale = std::max(scale, std::abs(wt.values[k]));
                diff = std::max(diff, std::abs(wt.values[k] - w2.values[k]));
            }
            coherence_worst = std::max(coherence_worst, diff / (scale + 1e-300));
            if (diff > 1e-12 * (scale + 1.0)) pass = false;
        }
        maxes.push_back(max_ratio);

        // converse restriction check on v(x,y) = u(x)
        auto g1 = suite_smooth_1d()[4];
        Generator2D sep{"xonly", [&](double x, double) { return g1.f(x); },
                        [&](double x, double) { return g1.df(x); },
                        [](double, double) { return 0.0; }};
        ProductField v = sample_product(sep, p1.dom.grid, p2.dom.grid, p1.dom.mask, p2.dom.mask);
        ProductField w = extend_product(v, *p1.map, *p2.map);
        ScalarField u1(p1.dom.grid, p1.dom.mask);
        for (CellIndex x = 0; x < p1.dom.grid.total_cells(); ++x)
            u1[x] = g1.f(p1.dom.grid.center_coord(x, 0));
        const auto& open_y = p2.dom.mask->open_cells();
        std::vector<CellIndex> ball(open_y.begin() + std::int64_t(open_y.size()) / 3,
                                    open_y.begin() + 2 * std::int64_t(open_y.size()) / 3);
        ConverseReport crep = restriction_converse_check(w, *p1.dom.mask, u1, ball, 2.0);
        if (crep.slices_passed != crep.slices_checked) pass = false;
    }
    double drift = std::abs(maxes[1] - maxes[0]) / maxes[0];
    if (drift >= 0.25) pass = false;
    detail << "max_ratio=" << std::fixed << maxes[0] << "->" << maxes[1] << " drift=" << drift
           << " coherence<=" << std::scientific << coherence_worst;
    report(9, "product theorem", pass, detail.str());
}

// --- criterion 10: determinism --------------------------------------------
void criterion10() {
    bool pass = true;
    auto run_pair = [&](const char* study, const char* domain, const char* out_a,
                        const char* out_b, const char* file) {
        ExperimentConfig cfg;
        cfg.study = study;
        cfg.domain = domain;
        cfg.levels = {1.0 / 32.0};
        cfg.p_values = {2.0};
        cfg.seed = 77;
        cfg.output = out_a;
        fs::remove_all(out_a);
        fs::remove_all(out_b);
        int rc1 = std::string(study) == "certify" ? run_certification(cfg) : run_norm_study(cfg);
        cfg.output = out_b;
        int rc2 = std::string(study) == "certify" ? run_certification(cfg) : run_norm_study(cfg);
        if (rc1 != rc2) pass = false;
        if (slurp(fs::path(out_a) / file) != slurp(fs::path(out_b) / file)) pass = false;
        if (slurp(fs::path(out_a) / file).empty()) pass = false;
    };
    run_pair("certify", "unit_square", "/tmp/sobex_acc_c1", "/tmp/sobex_acc_c2",
             "certify_L0.json");
    run_pair("extension", "unit_square", "/tmp/sobex_acc_n1", "/tmp/sobex_acc_n2",
             "extension_ratios.csv");
    report(10, "determinism", pass, "byte-identical reports under a fixed seed");
}

} // namespace

int main() {
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    criterion10();
    if (failures == 0) {
        std::printf("acceptance: all criteria PASS\n");
        return 0;
    }
    std::printf("acceptance: %d criteria FAILED\n", failures);
    return 1;
}
