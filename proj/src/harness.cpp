#include "sobex/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "sobex/errors.hpp"

namespace sobex {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// ------------------------------------------------------------- config

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    ordered_json j = ordered_json::parse(text);
    ExperimentConfig c;
    c.schema_version = j.value("schema_version", 1);
    c.study = j.value("study", std::string("certify"));
    c.domain = j.value("domain", std::string("unit_square"));
    c.domain2 = j.value("domain2", std::string(""));
    c.shape_file = j.value("shape_file", std::string(""));
    c.shape_file2 = j.value("shape_file2", std::string(""));
    if (j.contains("p")) {
        c.p_values.clear();
        if (j["p"].is_array())
            for (const auto& v : j["p"]) c.p_values.push_back(v.get<double>());
        else
            c.p_values.push_back(j["p"].get<double>());
    }
    if (j.contains("levels")) {
        c.levels.clear();
        for (const auto& v : j["levels"]) c.levels.push_back(v.get<double>());
    }
    if (c.levels.empty()) throw std::invalid_argument("config: levels must be nonempty");
    for (std::size_t i = 1; i < c.levels.size(); ++i)
        if (!(c.levels[i] < c.levels[i - 1]))
            throw std::invalid_argument("config: levels must be strictly decreasing");
    c.epsilon = j.value("epsilon", 0.5);
    c.delta_s = j.value("delta_s", -1.0);
    c.suite = j.value("suite", std::string("smooth2d"));
    c.seed = j.value("seed", std::uint64_t(1));
    c.output = j.value("output", std::string("out"));
    c.jobs = j.value("jobs", 0);
    c.dump_whitney = j.value("dump_whitney", std::string(""));
    c.dump_partition = j.value("dump_partition", std::string(""));
    c.dump_quasicubes = j.value("dump_quasicubes", std::string(""));
    c.dump_operator = j.value("dump_operator", std::string(""));
    return c;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string ExperimentConfig::to_json() const {
    ordered_json j;
    j["schema_version"] = schema_version;
    j["study"] = study;
    j["domain"] = domain;
    if (!domain2.empty()) j["domain2"] = domain2;
    if (!shape_file.empty()) j["shape_file"] = shape_file;
    if (!shape_file2.empty()) j["shape_file2"] = shape_file2;
    j["p"] = p_values;
    j["levels"] = levels;
    j["epsilon"] = epsilon;
    j["delta_s"] = delta_s;
    j["suite"] = suite;
    j["seed"] = seed;
    j["output"] = output;
    return j.dump(2);
}

// ------------------------------------------------------------- domains

namespace {

std::string shape_box(double x0, double y0, double x1, double y1) {
    std::ostringstream ss;
    ss.precision(17);
    ss << R"({"prim":"box","lo":[)" << x0 << "," << y0 << R"(],"hi":[)" << x1 << "," << y1 << "]}";
    return ss.str();
}

std::string shape_box1d(double x0, double x1) {
    std::ostringstream ss;
    ss.precision(17);
    ss << R"({"prim":"box","lo":[)" << x0 << R"(],"hi":[)" << x1 << "]}";
    return ss.str();
}

std::string difference(const std::string& a, const std::string& b) {
    return std::string(R"({"op":"difference","args":[)") + a + "," + b + "]}";
}

} // namespace

ResolvedDomain resolve_domain(const std::string& name, double h) {
    ResolvedDomain d;
    if (name == "window") {
        d.window_center = {0.0, 0.0};
        d.window_side = 2.0;
        d.dim = 2;
        return d;
    }
    if (name == "unit_square") {
        d.shape_json = shape_box(0.0, 0.0, 1.0, 1.0);
        d.window_center = {0.5, 0.5};
        d.window_side = 16.0;
        return d;
    }
    if (name == "unit_disk") { // unit diameter, matching the square's scale
        d.shape_json = R"({"prim":"ball","c":[0,0],"r":0.5})";
        d.window_center = {0.0, 0.0};
        d.window_side = 16.0;
        return d;
    }
    if (name == "point") {
        std::ostringstream ss;
        ss.precision(17);
        ss << R"({"prim":"ball","c":[0,0],"r":)" << 0.75 * h << "}";
        d.shape_json = ss.str();
        d.window_center = {0.0, 0.0};
        d.window_side = 8.0;
        return d;
    }
    if (name == "segment") {
        d.shape_json = shape_box(-0.5, -0.6 * h, 0.5, 0.6 * h);
        d.window_center = {0.0, 0.0};
        d.window_side = 16.0;
        return d;
    }
    if (name == "half_plane") {
        d.shape_json = R"({"prim":"halfplane","normal":[1,0],"offset":0})";
        d.window_center = {0.0, 0.0};
        d.window_side = 4.0;
        return d;
    }
    if (name == "slit_square") { // slit one open-cell row wide; S closes over it
        d.shape_json = difference(shape_box(0.0, 0.0, 1.0, 1.0),
                                  shape_box(-0.1, 0.5 - 1.2 * h, 0.5, 0.5 + 1.2 * h));
        d.window_center = {0.5, 0.5};
        d.window_side = 16.0;
        return d;
    }
    if (name == "slit_square_wide") { // slit survives the closure: S keeps a gap
        d.shape_json = difference(shape_box(0.0, 0.0, 1.0, 1.0),
                                  shape_box(-0.1, 0.5 - 2.2 * h, 0.5, 0.5 + 2.2 * h));
        d.window_center = {0.5, 0.5};
        d.window_side = 16.0;
        return d;
    }
    if (name == "slit_disk") {
        d.shape_json = difference(R"({"prim":"ball","c":[0,0],"r":1})",
                                  shape_box(0.0, -1.2 * h, 1.01, 1.2 * h));
        d.window_center = {0.0, 0.0};
        d.window_side = 4.0;
        return d;
    }
    if (name == "slit_disk_wide") {
        d.shape_json = difference(R"({"prim":"ball","c":[0,0],"r":1})",
                                  shape_box(0.0, -2.2 * h, 1.01, 2.2 * h));
        d.window_center = {0.0, 0.0};
        d.window_side = 32.0;
        return d;
    }
    if (name == "cusp") { // outward cusp 0 < y < x^4
        std::ostringstream ss;
        ss.precision(17);
        ss << R"({"prim":"polygon","pts":[[0,0],[1,0],[1,1])";
        for (int k = 255; k >= 1; --k) {
            double x = double(k) / 256.0;
            ss << ",[" << x << "," << x * x * x * x << "]";
        }
        ss << "]}";
        d.shape_json = ss.str();
        d.window_center = {0.5, 0.5};
        d.window_side = 2.0;
        return d;
    }
    if (name == "point1d") {
        d.shape_json = shape_box1d(-0.6 * h, 0.6 * h);
        d.window_center = {0.0};
        d.window_side = 8.0;
        d.dim = 1;
        return d;
    }
    if (name == "unit_interval") {
        d.shape_json = shape_box1d(0.0, 1.0);
        d.window_center = {0.5};
        d.window_side = 16.0;
        d.dim = 1;
        return d;
    }
    if (name == "punctured_interval") {
        d.shape_json = difference(shape_box1d(0.0, 1.0), shape_box1d(0.5 - 1.2 * h, 0.5 + 1.2 * h));
        d.window_center = {0.5};
        d.window_side = 16.0;
        d.dim = 1;
        return d;
    }
    throw std::invalid_argument("unknown domain: " + name);
}

std::shared_ptr<const DomainMask> make_full_mask(const GridSpec& grid) {
    std::vector<std::uint8_t> state(std::size_t(grid.total_cells()), 2);
    return std::make_shared<DomainMask>(grid, std::move(state));
}

DomainInstance build_domain(const ResolvedDomain& dom, double h) {
    const double cells_d = dom.window_side / h;
    const std::int64_t cells = std::int64_t(std::llround(cells_d));
    if (std::abs(double(cells) - cells_d) > 1e-9 || cells <= 0 || (cells & (cells - 1)) != 0)
        throw std::invalid_argument("build_domain: window side / h must be a power of two");
    DomainInstance di;
    di.grid = make_window_grid(dom.window_center, h, cells);
    di.window = Cube(dom.window_center, 0.5 * dom.window_side);
    if (dom.shape_json.empty()) {
        di.mask = make_full_mask(di.grid);
    } else {
        auto shape = parse_shape_json(dom.shape_json);
        di.mask = std::make_shared<DomainMask>(rasterize(*shape, di.grid));
    }
    return di;
}

ResolvedDomain resolve_config_domain(const std::string& name, const std::string& shape_file, double h) {
    if (shape_file.empty()) return resolve_domain(name, h);
    std::ifstream in(shape_file);
    if (!in) throw std::invalid_argument("cannot open shape file: " + shape_file);
    std::stringstream ss;
    ss << in.rdbuf();
    ResolvedDomain d;
    d.shape_json = ss.str();
    auto shape = parse_shape_json(d.shape_json);
    std::vector<double> lo, hi;
    shape->bounding_box(lo, hi);
    double diam = 0.0;
    d.window_center.resize(lo.size());
    for (std::size_t a = 0; a < lo.size(); ++a) {
        if (!std::isfinite(lo[a]) || !std::isfinite(hi[a]))
            throw std::invalid_argument("custom shape needs a bounded bounding box");
        diam = std::max(diam, hi[a] - lo[a]);
        d.window_center[a] = 0.5 * (lo[a] + hi[a]);
    }
    d.dim = int(lo.size());
    double side = 11.0 * std::max(diam, 16.0 * h);
    double cells = std::pow(2.0, std::ceil(std::log2(side / h)));
    d.window_side = cells * h;
    return d;
}

double fit_order(const std::vector<double>& hs, const std::vector<double>& errs) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = hs.size();
    for (std::size_t i = 0; i < m; ++i) {
        double x = std::log(hs[i]), y = std::log(std::max(errs[i], 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (double(m) * sxy - sx * sy) / (double(m) * sxx - sx * sx);
}

Pipeline build_pipeline(const ResolvedDomain& dom, double h, double epsilon, double delta_s,
                        std::uint64_t seed) {
    Pipeline p;
    p.dom = build_domain(dom, h);
    const GridSpec& grid = p.dom.grid;
    std::int64_t E = grid.extent(0);
    int L = 0;
    while ((std::int64_t(1) << (L + 1)) <= E) ++L;
    p.whitney = std::make_shared<const WhitneyFamily>(
        WhitneyFamily::decompose(p.dom.mask, p.dom.window, 0, L - 1));
    p.basis = std::make_shared<const BumpBasis>(BumpBasis::build(p.whitney, 4096, seed ^ 0x9e37));
    // 0.5 diam keeps the bump ramp at the delta_S cut resolvable at the
    // working spacings (ramp width = delta_S/16)
    p.delta_s = delta_s > 0.0 ? delta_s : 0.5 * p.dom.mask->closed_diam();
    p.qcubes = std::make_shared<const QuasiCubeFamily>(
        QuasiCubeFamily::build(p.whitney, epsilon, p.delta_s));
    p.map = std::make_shared<const ExtensionMap>(ExtensionMap::assemble(p.qcubes, p.basis, grid));
    return p;
}

// ------------------------------------------------------------- helpers

namespace {

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)v);
    return buf;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out << text;
}

struct CsvWriter {
    std::ostringstream ss;
    explicit CsvWriter(const std::string& header) {
        ss.precision(17);
        ss << header << "\n";
    }
    template <class... Ts>
    void row(const Ts&... vals) {
        bool first = true;
        ((ss << (first ? "" : ","), ss << vals, first = false), ...);
        ss << "\n";
    }
};

} // namespace

// ------------------------------------------------------------- certify

int run_certification(const ExperimentConfig& cfg) {
    fs::create_directories(cfg.output);
    int exit_code = 0;
    ordered_json summary;
    summary["schema_version"] = cfg.schema_version;
    summary["study"] = "certify";
    summary["config"] = ordered_json::parse(cfg.to_json());
    summary["levels"] = ordered_json::array();

    Rng root(cfg.seed);
    for (std::size_t li = 0; li < cfg.levels.size(); ++li) {
        const double h = cfg.levels[li];
        ResolvedDomain dom = resolve_config_domain(cfg.domain, cfg.shape_file, h);
        DomainInstance di = build_domain(dom, h);
        const DomainMask& mask = *di.mask;
        Rng rng = root.fork(li);

        ordered_json r;
        r["h"] = h;
        r["domain"] = cfg.domain;
        r["domain_hash"] = hex64(mask.content_hash());
        r["epsilon"] = cfg.epsilon;

        // Ahlfors density curve
        {
            const double diam = mask.closed_diam();
            const double delta = std::max(4.0 * h, 0.5 * diam);
            AhlforsReport rep = measure_density(mask, delta, 4096, rng.fork(1));
            ordered_json aj;
            aj["C_A"] = rep.C_A;
            aj["delta_A"] = rep.delta_A;
            ordered_json curve = ordered_json::array();
            for (double d2 = 2.0 * h; d2 <= delta * (1.0 + 1e-12); d2 *= 2.0) {
                ordered_json pt;
                pt["delta"] = d2;
                pt["C_A"] = rep.c_a_at(d2);
                curve.push_back(pt);
            }
            aj["curve"] = curve;
            r["ahlfors"] = aj;
        }

        double delta_s = cfg.delta_s > 0.0 ? cfg.delta_s : 0.25 * mask.closed_diam();
        r["delta_s"] = delta_s;

        // Whitney + partition + quasi-cubes
        try {
            std::int64_t E = di.grid.extent(0);
            int L = 0;
            while ((std::int64_t(1) << (L + 1)) <= E) ++L;
            auto fam = std::make_shared<const WhitneyFamily>(
                WhitneyFamily::decompose(di.mask, di.window, 0, L - 1));
            const auto& cert = fam->certification();
            ordered_json wj;
            wj["cubes"] = cert.cube_count;
            wj["frontier"] = cert.frontier_count;
            wj["window_edge"] = cert.window_edge_count;
            wj["uncovered_cells"] = cert.uncovered_count;
            wj["lower_bound_failures"] = cert.lower_bound_failures;
            wj["upper_bound_failures"] = cert.upper_bound_failures;
            wj["adjacency_ratio_failures"] = cert.adjacency_ratio_failures;
            wj["point_overlap_N"] = cert.point_overlap_N;
            wj["star_overlap_N"] = cert.star_overlap_N;
            wj["partition_identity"] = cert.partition_identity;
            wj["margin_ok"] = cert.margin_ok;
            wj["passed"] = cert.passed();
            r["whitney"] = wj;
            if (!cfg.dump_whitney.empty() && li + 1 == cfg.levels.size())
                fam->dump_jsonl(cfg.dump_whitney);

            auto basis = std::make_shared<const BumpBasis>(
                BumpBasis::build(fam, 4096, cfg.seed ^ (li * 77 + 5)));
            // partition residual probes at covered cells two cells off S
            {
                Rng prng = rng.fork(2);
                const auto& dt = fam->dt();
                const GridSpec& grid = di.grid;
                double max_resid = 0.0;
                std::int64_t probes = 0;
                std::int64_t attempts = 0;
                while (probes < 10000 && attempts < 200000) {
                    ++attempts;
                    CellIndex ci = CellIndex(prng.next_below(std::uint64_t(grid.total_cells())));
                    if (mask.is_closed(ci) || dt[std::size_t(ci)] < 2) continue;
                    if (!fam->cell_is_covered(ci)) continue;
                    CellCoord c = grid.decode(ci);
                    std::array<double, kMaxDim> x;
                    for (int a = 0; a < grid.dim(); ++a)
                        x[std::size_t(a)] =
                            grid.center_coord(c[a], a) + (prng.next_double() - 0.5) * grid.spacing();
                    auto vals = basis->evaluate(std::span<const double>(x.data(), std::size_t(grid.dim())));
                    double s = 0.0;
                    for (const auto& pv : vals) s += pv.phi;
                    max_resid = std::max(max_resid, std::abs(s - 1.0));
                    ++probes;
                }
                ordered_json pj;
                pj["probes"] = probes;
                pj["max_partition_residual"] = max_resid;
                pj["derivative_bound_constant"] = basis->derivative_bound_constant();
                r["partition"] = pj;
                if (!cfg.dump_partition.empty() && li + 1 == cfg.levels.size()) {
                    CsvWriter csv("x0,x1,phi_sum");
                    Rng drng = rng.fork(9);
                    for (int k = 0; k < 2000; ++k) {
                        CellIndex ci = CellIndex(drng.next_below(std::uint64_t(grid.total_cells())));
                        if (mask.is_closed(ci) || !fam->cell_is_covered(ci)) continue;
                        CellCoord c = grid.decode(ci);
                        std::array<double, kMaxDim> x{};
                        for (int a = 0; a < grid.dim(); ++a) x[std::size_t(a)] = grid.center_coord(c[a], a);
                        auto vals = basis->evaluate(std::span<const double>(x.data(), std::size_t(grid.dim())));
                        double s = 0.0;
                        for (const auto& pv : vals) s += pv.phi;
                        csv.row(x[0], grid.dim() > 1 ? x[1] : 0.0, s);
                    }
                    write_text(cfg.dump_partition, csv.ss.str());
                }
            }

            try {
                auto qf = QuasiCubeFamily::build(fam, cfg.epsilon, delta_s);
                const auto& qc = qf.certification();
                ordered_json qj;
                qj["small_cubes"] = qc.small_count;
                qj["certified"] = qc.certified_count;
                qj["floor_exempt"] = qc.floor_count;
                qj["gamma1"] = qc.gamma1;
                qj["gamma2"] = qc.gamma2;
                qj["containment_failures"] = qc.containment_failures;
                qj["disjoint_failures"] = qc.disjoint_failures;
                ordered_json hist = ordered_json::array();
                for (const auto& [k, v] : qf.overlap_histogram()) {
                    ordered_json e;
                    e["overlap"] = k;
                    e["cells"] = v;
                    hist.push_back(e);
                }
                qj["overlap_histogram"] = hist;
                r["quasicubes"] = qj;
                if (!cfg.dump_quasicubes.empty() && li + 1 == cfg.levels.size())
                    qf.dump_jsonl(cfg.dump_quasicubes);
            } catch (const regularity_violation_error& e) {
                ordered_json qj;
                qj["flag"] = "regularity_violation";
                qj["message"] = e.what();
                qj["flagged_cubes"] = std::int64_t(e.cube_ids.size());
                r["quasicubes"] = qj;
                exit_code = std::max(exit_code, 2);
            }
        } catch (const resolution_exhausted_error& e) {
            ordered_json wj;
            wj["flag"] = "resolution_exhausted";
            wj["message"] = e.what();
            wj["uncovered_cells"] = std::int64_t(e.uncovered_cells.size());
            r["whitney"] = wj;
            exit_code = std::max(exit_code, 2);
        }

        // quasiconvexity curve; local ratios past 10 flag the domain as not
        // uniformly locally quasiconvex at grid scale (slit-type geometry)
        {
            ordered_json curve = ordered_json::array();
            const double diam = mask.closed_diam();
            int qi = 0;
            bool flagged = false;
            for (double R : {8.0 * h, 32.0 * h, 0.25 * diam}) {
                if (R <= 2.0 * h) continue;
                try {
                    QuasiconvexityReport qr = quasiconvexity(mask, R, 256, rng.fork(100 + qi++));
                    ordered_json e;
                    e["R"] = R;
                    e["C_q"] = qr.C_q;
                    e["pairs"] = qr.pairs_tested;
                    if (R <= 8.0 * h && qr.C_q > 10.0) {
                        e["flag"] = "not_locally_quasiconvex";
                        flagged = true;
                    }
                    curve.push_back(e);
                } catch (const connectivity_error& err) {
                    ordered_json e;
                    e["R"] = R;
                    e["flag"] = "connectivity";
                    curve.push_back(e);
                    exit_code = std::max(exit_code, 2);
                }
            }
            // directed straddle probe at delta = 4h-5h across blocked rows
            QuasiconvexityReport st = quasiconvexity_straddles(mask, 5, 256);
            ordered_json sj;
            sj["delta"] = st.R;
            sj["C_q"] = st.C_q;
            sj["pairs"] = st.pairs_tested;
            if (st.C_q > 10.0) {
                sj["flag"] = "not_locally_quasiconvex";
                flagged = true;
            }
            if (flagged) exit_code = std::max(exit_code, 2);
            r["quasiconvexity"] = curve;
            r["quasiconvexity_straddles"] = sj;
        }

        write_text(cfg.output + "/certify_L" + std::to_string(li) + ".json", r.dump(2) + "\n");
        ordered_json brief;
        brief["h"] = h;
        brief["file"] = "certify_L" + std::to_string(li) + ".json";
        summary["levels"].push_back(brief);
    }
    write_text(cfg.output + "/certify_summary.json", summary.dump(2) + "\n");
    return exit_code;
}

// ------------------------------------------------------------- norms

namespace {

int run_extension_study(const ExperimentConfig& cfg) {
    int exit_code = 0;
    CsvWriter csv("study,domain,h,p,function,ratio");
    ordered_json summary;
    summary["schema_version"] = cfg.schema_version;
    summary["study"] = "extension";
    summary["config"] = ordered_json::parse(cfg.to_json());
    ordered_json levels = ordered_json::array();

    std::map<double, std::vector<double>> max_ratio_per_p;
    for (std::size_t li = 0; li < cfg.levels.size(); ++li) {
        const double h = cfg.levels[li];
        ResolvedDomain dom = resolve_config_domain(cfg.domain, cfg.shape_file, h);
        ordered_json lj;
        lj["h"] = h;
        try {
            Pipeline pipe = build_pipeline(dom, h, cfg.epsilon, cfg.delta_s, cfg.seed);
            lj["domain_hash"] = hex64(pipe.dom.mask->content_hash());
            if (!cfg.dump_operator.empty() && li + 1 == cfg.levels.size())
                pipe.map->dump_stats_json(cfg.dump_operator);
            auto gens = get_suite_2d(cfg.suite);
            std::vector<std::pair<std::string, ScalarField>> suite;
            for (const auto& g : gens)
                suite.push_back({g.name, sample_field(g, pipe.dom.grid, pipe.dom.mask)});
            ordered_json pj = ordered_json::array();
            for (double p : cfg.p_values) {
                OperatorNormReport rep = operator_norm_study(*pipe.map, suite, p);
                for (std::size_t k = 0; k < rep.ratios.size(); ++k)
                    csv.row("extension", cfg.domain, h, p, rep.names[k], rep.ratios[k]);
                ordered_json e;
                e["p"] = p;
                e["max_ratio"] = rep.max_ratio;
                e["skipped_zero_norm"] = rep.skipped_zero_norm;
                pj.push_back(e);
                max_ratio_per_p[p].push_back(rep.max_ratio);
            }
            lj["per_p"] = pj;
        } catch (const domain_flag_error& e) {
            lj["flag"] = e.what();
            exit_code = std::max(exit_code, 2);
        }
        levels.push_back(lj);
    }
    summary["levels"] = levels;
    ordered_json drift = ordered_json::array();
    for (const auto& [p, maxes] : max_ratio_per_p) {
        for (std::size_t i = 1; i < maxes.size(); ++i) {
            ordered_json e;
            e["p"] = p;
            e["from_level"] = i - 1;
            e["drift"] = std::abs(maxes[i] - maxes[i - 1]) / maxes[i - 1];
            e["growth"] = maxes[i] / maxes[i - 1];
            drift.push_back(e);
        }
    }
    summary["refinement"] = drift;
    write_text(cfg.output + "/extension_ratios.csv", csv.ss.str());
    write_text(cfg.output + "/extension_summary.json", summary.dump(2) + "\n");
    return exit_code;
}

int run_calderon_study(const ExperimentConfig& cfg) {
    CsvWriter csv("study,h,p,function,lp,grad_lp,w1p,sharp_lp,ratio");
    ordered_json summary;
    summary["schema_version"] = cfg.schema_version;
    summary["study"] = "calderon";
    summary["config"] = ordered_json::parse(cfg.to_json());
    ordered_json brackets = ordered_json::array();

    for (std::size_t li = 0; li < cfg.levels.size(); ++li) {
        const double h = cfg.levels[li];
        ResolvedDomain dom = resolve_domain("window", h);
        DomainInstance di = build_domain(dom, h);
        auto gens = get_suite_2d(cfg.suite);
        std::map<double, std::pair<double, double>> bracket; // p -> (min, max)
        for (const auto& g : gens) {
            ScalarField u = sample_field(g, di.grid, di.mask);
            auto grads = gradient_fields(u, di.mask.get());
            auto radii = dyadic_radii(di.grid, di.mask->closed_diam());
            ScalarField sharp = sharp_maximal(u, *di.mask, radii);
            const auto& cells = di.mask->closed_cells();
            for (double p : cfg.p_values) {
                double lp = p_norm(u, cells, p);
                double gsum = 0.0;
                for (const auto& gf : grads) gsum += p_norm(gf, cells, p);
                double w1p = lp + gsum;
                double sharp_lp = p_norm(sharp, cells, p);
                double ratio = (lp + sharp_lp) / w1p;
                csv.row("calderon", h, p, g.name, lp, gsum, w1p, sharp_lp, ratio);
                auto it = bracket.find(p);
                if (it == bracket.end())
                    bracket[p] = {ratio, ratio};
                else {
                    it->second.first = std::min(it->second.first, ratio);
                    it->second.second = std::max(it->second.second, ratio);
                }
            }
        }
        for (const auto& [p, mm] : bracket) {
            ordered_json e;
            e["h"] = h;
            e["p"] = p;
            e["lo"] = mm.first;
            e["hi"] = mm.second;
            brackets.push_back(e);
        }
    }
    summary["brackets"] = brackets;
    write_text(cfg.output + "/calderon.csv", csv.ss.str());
    write_text(cfg.output + "/calderon_summary.json", summary.dump(2) + "\n");
    return 0;
}

int run_commutation_study(const ExperimentConfig& cfg) {
    CsvWriter csv("study,h,function,sup_diff,points,skipped_runs");
    ordered_json summary;
    summary["schema_version"] = cfg.schema_version;
    summary["study"] = "commutation";
    summary["config"] = ordered_json::parse(cfg.to_json());

    std::map<std::string, std::vector<double>> sups;
    for (std::size_t li = 0; li < cfg.levels.size(); ++li) {
        const double h = cfg.levels[li];
        std::string d1 = cfg.domain.empty() ? "unit_interval" : cfg.domain;
        std::string d2 = cfg.domain2.empty() ? "unit_interval" : cfg.domain2;
        Pipeline pipe1 = build_pipeline(resolve_domain(d1, h), h, cfg.epsilon, cfg.delta_s, cfg.seed);
        DomainInstance di2 = build_domain(resolve_domain(d2, h), h);
        for (const auto& g : suite_smooth_2d()) {
            if (g.name == "const1" || g.name == "x" || g.name == "y") continue;
            ProductField u = sample_product(g, pipe1.dom.grid, di2.grid, pipe1.dom.mask, di2.mask);
            ProductField du = sample_product_derivative(g, true, pipe1.dom.grid, di2.grid,
                                                        pipe1.dom.mask, di2.mask);
            DiscrepancyReport rep = commutation_check(u, du, *pipe1.map, 0);
            csv.row("commutation", h, g.name, rep.sup_diff, rep.points_checked, rep.skipped_short_runs);
            sups[g.name].push_back(rep.sup_diff);
        }
    }
    ordered_json orders = ordered_json::array();
    for (const auto& [name, errs] : sups) {
        if (errs.size() < 2) continue;
        ordered_json e;
        e["function"] = name;
        e["fitted_order"] = fit_order(cfg.levels, errs);
        orders.push_back(e);
    }
    summary["orders"] = orders;
    write_text(cfg.output + "/commutation.csv", csv.ss.str());
    write_text(cfg.output + "/commutation_summary.json", summary.dump(2) + "\n");
    return 0;
}

int run_product_study(const ExperimentConfig& cfg) {
    CsvWriter csv("study,h,p,function,ratio,restriction_exact,coherence_diff");
    ordered_json summary;
    summary["schema_version"] = cfg.schema_version;
    summary["study"] = "product";
    summary["config"] = ordered_json::parse(cfg.to_json());
    std::map<double, std::vector<double>> max_ratio_per_p;
    ordered_json converse = ordered_json::array();

    for (std::size_t li = 0; li < cfg.levels.size(); ++li) {
        const double h = cfg.levels[li];
        std::string d1 = cfg.domain.empty() ? "unit_interval" : cfg.domain;
        std::string d2 = cfg.domain2.empty() ? "unit_interval" : cfg.domain2;
        Pipeline pipe1 = build_pipeline(resolve_domain(d1, h), h, cfg.epsilon, cfg.delta_s, cfg.seed);
        Pipeline pipe2 = build_pipeline(resolve_domain(d2, h), h, cfg.epsilon, cfg.delta_s, cfg.seed + 1);

        for (double p : cfg.p_values) {
            double max_ratio = 0.0;
            for (const auto& g : suite_smooth_2d()) {
                ProductField u = sample_product(g, pipe1.dom.grid, pipe2.dom.grid, pipe1.dom.mask,
                                                pipe2.dom.mask);
                ProductField w = extend_product(u, *pipe1.map, *pipe2.map);
                double den = product_w1p_norm(u, ProductRegion::OpenProduct, p);
                if (den <= 0.0) continue;
                double num = product_w1p_norm(w, ProductRegion::All, p);
                double ratio = num / den;
                max_ratio = std::max(max_ratio, ratio);
                bool exact = true;
                for (CellIndex y : pipe2.dom.mask->open_cells())
                    for (CellIndex x : pipe1.dom.mask->open_cells())
                        if (w.at(x, y) != u.at(x, y)) exact = false;
                ProductField wt = transpose(w);
                ProductField w2 = extend_product(transpose(u), *pipe2.map, *pipe1.map);
                double coh = 0.0;
                for (std::size_t k = 0; k < wt.values.size(); ++k)
                    coh = std::max(coh, std::abs(wt.values[k] - w2.values[k]));
                csv.row("product", h, p, g.name, ratio, exact ? 1 : 0, coh);
            }
            max_ratio_per_p[p].push_back(max_ratio);
        }

        // converse: w extends v(x,y) = u(x); every slice in a ball of
        // Omega_2 must restrict to u
        {
            Generator1D g1 = suite_smooth_1d()[4]; // sin_pi
            Generator2D sep{"sep_" + g1.name, [&](double x, double) { return g1.f(x); },
                            [&](double x, double) { return g1.df(x); },
                            [](double, double) { return 0.0; }};
            ProductField v = sample_product(sep, pipe1.dom.grid, pipe2.dom.grid, pipe1.dom.mask,
                                            pipe2.dom.mask);
            ProductField w = extend_product(v, *pipe1.map, *pipe2.map);
            ScalarField u1(pipe1.dom.grid, pipe1.dom.mask);
            for (CellIndex x = 0; x < pipe1.dom.grid.total_cells(); ++x)
                u1[x] = g1.f(pipe1.dom.grid.center_coord(x, 0));
            const auto& open_y = pipe2.dom.mask->open_cells();
            std::vector<CellIndex> ball(open_y.begin() + std::int64_t(open_y.size()) / 3,
                                        open_y.begin() + 2 * std::int64_t(open_y.size()) / 3);
            ConverseReport rep =
                restriction_converse_check(w, *pipe1.dom.mask, u1, ball, cfg.p_values.front());
            ordered_json e;
            e["h"] = h;
            e["slices_checked"] = rep.slices_checked;
            e["slices_passed"] = rep.slices_passed;
            e["max_slice_norm"] = rep.max_slice_norm;
            converse.push_back(e);
        }
    }
    ordered_json drift = ordered_json::array();
    for (const auto& [p, maxes] : max_ratio_per_p) {
        for (std::size_t i = 1; i < maxes.size(); ++i) {
            ordered_json e;
            e["p"] = p;
            e["drift"] = std::abs(maxes[i] - maxes[i - 1]) / maxes[i - 1];
            drift.push_back(e);
        }
    }
    summary["refinement"] = drift;
    summary["converse"] = converse;
    write_text(cfg.output + "/product.csv", csv.ss.str());
    write_text(cfg.output + "/product_summary.json", summary.dump(2) + "\n");
    return 0;
}

} // namespace

int run_norm_study(const ExperimentConfig& cfg) {
    fs::create_directories(cfg.output);
    if (cfg.study == "extension") return run_extension_study(cfg);
    if (cfg.study == "calderon") return run_calderon_study(cfg);
    if (cfg.study == "commutation") return run_commutation_study(cfg);
    if (cfg.study == "product") return run_product_study(cfg);
    throw std::invalid_argument("run_norm_study: unknown study '" + cfg.study + "'");
}

} // namespace sobex
