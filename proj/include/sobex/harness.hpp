#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sobex/density.hpp"
#include "sobex/extension.hpp"
#include "sobex/product.hpp"
#include "sobex/quasicubes.hpp"
#include "sobex/suites.hpp"

namespace sobex {

/// Batch experiment description (JSON file). `levels` is a strictly
/// decreasing list of grid spacings; a fixed seed makes every report
/// byte-identical across runs.
struct ExperimentConfig {
    int schema_version = 1;
    std::string study;    // "certify", "extension", "calderon", "commutation", "product"
    std::string domain;   // named domain or "window"
    std::string domain2;  // second factor for product studies
    std::string shape_file;  // overrides `domain` when set
    std::string shape_file2; // second factor override
    std::vector<double> p_values{2.0};
    std::vector<double> levels{1.0 / 32.0};
    double epsilon = 0.5;
    double delta_s = -1.0; // <0: use 0.25 * diam S
    std::string suite = "smooth2d";
    std::uint64_t seed = 1;
    std::string output = "out";
    int jobs = 0; // 0: library default
    // dump hooks
    std::string dump_whitney, dump_partition, dump_quasicubes, dump_operator;

    static ExperimentConfig from_json_file(const std::string& path);
    static ExperimentConfig from_json_text(const std::string& text);
    std::string to_json() const;
};

/// A named domain resolved at a given spacing: slit widths and point radii
/// track h so the rasterization stays one cell row wide.
struct ResolvedDomain {
    std::string shape_json;           // empty for "window"
    std::vector<double> window_center;
    double window_side = 0.0;
    int dim = 2;
};
ResolvedDomain resolve_domain(const std::string& name, double h);

/// Named domain, or a custom shape file with an auto-sized dyadic window.
ResolvedDomain resolve_config_domain(const std::string& name, const std::string& shape_file, double h);

/// Grid + mask for a resolved domain (full-window mask for "window").
struct DomainInstance {
    GridSpec grid;
    std::shared_ptr<const DomainMask> mask;
    Cube window;
};
DomainInstance build_domain(const ResolvedDomain& dom, double h);

std::shared_ptr<const DomainMask> make_full_mask(const GridSpec& grid);

/// Least-squares slope of log(err) against log(h).
double fit_order(const std::vector<double>& hs, const std::vector<double>& errs);

/// Full pipeline for one domain at one spacing.
struct Pipeline {
    DomainInstance dom;
    std::shared_ptr<const WhitneyFamily> whitney;
    std::shared_ptr<const BumpBasis> basis;
    std::shared_ptr<const QuasiCubeFamily> qcubes;
    std::shared_ptr<const ExtensionMap> map;
    double delta_s = 0.0;
};
Pipeline build_pipeline(const ResolvedDomain& dom, double h, double epsilon, double delta_s,
                        std::uint64_t seed);

/// Exit taxonomy: 0 all pass, 2 domain-level mathematical flag raised,
/// 3 internal invariant violation.
int run_certification(const ExperimentConfig& config);
int run_norm_study(const ExperimentConfig& config);

} // namespace sobex
