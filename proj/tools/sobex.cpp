#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sobex/errors.hpp"
#include "sobex/harness.hpp"

namespace {

void apply_jobs(int jobs) {
    if (const char* env = std::getenv("SOBEX_JOBS")) jobs = std::atoi(env);
#ifdef _OPENMP
    if (jobs > 0) omp_set_num_threads(jobs);
#else
    (void)jobs;
#endif
}

int guarded(int (*fn)(const sobex::ExperimentConfig&), const sobex::ExperimentConfig& cfg) {
    try {
        return fn(cfg);
    } catch (const sobex::invariant_violation& e) {
        std::cerr << "internal invariant violation: " << e.what() << "\n";
        return 3;
    } catch (const sobex::domain_flag_error& e) {
        std::cerr << "domain flag: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sobex: Sobolev extension operator laboratory"};
    app.require_subcommand(1);
    int jobs = 0;
    app.add_option("--jobs", jobs, "worker thread bound (env SOBEX_JOBS overrides)");

    std::string config_path;
    std::string dump_whitney, dump_partition, dump_quasicubes, dump_operator;

    auto* certify = app.add_subcommand("certify", "run geometric certification suites");
    certify->add_option("--config", config_path)->required();
    certify->add_option("--dump-whitney", dump_whitney);
    certify->add_option("--dump-partition", dump_partition);
    certify->add_option("--dump-quasicubes", dump_quasicubes);

    auto* norms = app.add_subcommand("norms", "run norm/ratio studies");
    norms->add_option("--config", config_path)->required();
    norms->add_option("--dump-operator", dump_operator);

    std::string factor1, factor2, field_in, field_out;
    double h = 1.0 / 64.0, epsilon = 0.5, delta_s = -1.0;
    auto* extend = app.add_subcommand("extend", "extend a product field from Omega1 x Omega2");
    extend->add_option("--factor1", factor1, "shape JSON file for Omega1")->required();
    extend->add_option("--factor2", factor2, "shape JSON file for Omega2")->required();
    extend->add_option("--field", field_in, "input product field (SOBEXFLD + split)")->required();
    extend->add_option("--out", field_out)->required();
    extend->add_option("--h", h, "grid spacing");
    extend->add_option("--epsilon", epsilon);
    extend->add_option("--delta-s", delta_s);

    std::string mask_shape, mask_out, mask_pgm;
    auto* maskcmd = app.add_subcommand("mask", "rasterize a shape JSON to a mask file");
    maskcmd->add_option("--shape", mask_shape)->required();
    maskcmd->add_option("--h", h);
    maskcmd->add_option("--out", mask_out);
    maskcmd->add_option("--pgm", mask_pgm);

    CLI11_PARSE(app, argc, argv);
    apply_jobs(jobs);

    try {
        if (certify->parsed()) {
            auto cfg = sobex::ExperimentConfig::from_json_file(config_path);
            if (!dump_whitney.empty()) cfg.dump_whitney = dump_whitney;
            if (!dump_partition.empty()) cfg.dump_partition = dump_partition;
            if (!dump_quasicubes.empty()) cfg.dump_quasicubes = dump_quasicubes;
            return guarded(sobex::run_certification, cfg);
        }
        if (norms->parsed()) {
            auto cfg = sobex::ExperimentConfig::from_json_file(config_path);
            if (!dump_operator.empty()) cfg.dump_operator = dump_operator;
            return guarded(sobex::run_norm_study, cfg);
        }
        if (extend->parsed()) {
            auto dom1 = sobex::resolve_config_domain("", factor1, h);
            auto dom2 = sobex::resolve_config_domain("", factor2, h);
            auto pipe1 = sobex::build_pipeline(dom1, h, epsilon, delta_s, 1);
            auto pipe2 = sobex::build_pipeline(dom2, h, epsilon, delta_s, 2);
            auto raw = sobex::read_product_field(field_in);
            if (!(raw.gx == pipe1.dom.grid) || !(raw.gy == pipe2.dom.grid))
                throw std::invalid_argument("extend: field grids do not match the factor windows");
            sobex::ProductField u(raw.gx, raw.gy, pipe1.dom.mask, pipe2.dom.mask);
            u.values = std::move(raw.values);
            sobex::ProductField w = sobex::extend_product(u, *pipe1.map, *pipe2.map);
            sobex::write_product_field(w.values, w.grid_x, w.grid_y, field_out);
            return 0;
        }
        if (maskcmd->parsed()) {
            auto dom = sobex::resolve_config_domain("", mask_shape, h);
            auto di = sobex::build_domain(dom, h);
            if (!mask_out.empty()) sobex::write_mask(*di.mask, mask_out);
            if (!mask_pgm.empty()) sobex::write_mask_pgm(*di.mask, mask_pgm);
            return 0;
        }
    } catch (const sobex::invariant_violation& e) {
        std::cerr << "internal invariant violation: " << e.what() << "\n";
        return 3;
    } catch (const sobex::domain_flag_error& e) {
        std::cerr << "domain flag: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
