#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sobex/field.hpp"
#include "sobex/local_approx.hpp"
#include "sobex/partition.hpp"
#include "sobex/quasicubes.hpp"

namespace sobex {

enum class RowKind : std::uint8_t {
    Zero = 0,     // no contributing cube reaches the cell
    Identity = 1, // cell in S
    Unit = 2,     // convex combination, weights sum to 1
    Partial = 3,  // some located cubes are past delta_S (zero branch)
    Filled = 4,   // sub-resolution ring next to S: nearest S-cell value
};

struct ExtensionStats {
    std::int64_t rows = 0;
    std::int64_t nnz = 0;
    std::int64_t max_row_support = 0;
    std::int64_t identity_rows = 0;
    std::int64_t unit_rows = 0;
    std::int64_t partial_rows = 0;
    std::int64_t filled_rows = 0;
    double layer_volume = 0.0; // unit-row cells * h^n
    double min_weight = 0.0;
    double max_row_sum = 0.0;
};

/// Sparse realization of the averaging extension: for x outside S the row
/// is sum_Q phi_Q(x) * (uniform weights over H_Q); identity on S; zero
/// where only past-delta_S cubes reach (their projection is zero).
class ExtensionMap {
public:
    static ExtensionMap assemble(std::shared_ptr<const QuasiCubeFamily> qfam,
                                 std::shared_ptr<const BumpBasis> basis, const GridSpec& target);

    const GridSpec& target() const { return target_; }
    const DomainMask& source_mask() const { return qfam_->family().mask(); }
    const QuasiCubeFamily& qfam() const { return *qfam_; }
    const BumpBasis& basis() const { return *basis_; }

    RowKind row_kind(CellIndex i) const { return RowKind(kind_[std::size_t(i)]); }
    const ExtensionStats& stats() const { return stats_; }

    /// Eu = apply to samples on S (values outside closed cells are ignored;
    /// callers extend by zero per the L^p(S) contract).
    ScalarField apply(const ScalarField& u) const;
    void apply_raw(const double* in, double* out) const;

    /// Row data for inspection/tests.
    std::pair<std::span<const std::int32_t>, std::span<const double>> row(CellIndex i) const;

    void dump_stats_json(const std::string& path) const;

private:
    std::shared_ptr<const QuasiCubeFamily> qfam_;
    std::shared_ptr<const BumpBasis> basis_;
    GridSpec target_;
    std::vector<std::uint8_t> kind_;
    std::vector<std::int64_t> row_ptr_;
    std::vector<std::int32_t> cols_;
    std::vector<double> weights_;
    ExtensionStats stats_;
};

struct OperatorNormReport {
    double p = 2.0;
    std::vector<std::string> names;
    std::vector<double> ratios; // ||Eu||_{W^{1,p}(window)} / ||u||_{W^{1,p}(Omega)}
    double max_ratio = 0.0;
    double refinement_drift = -1.0; // filled when two resolutions are compared
    int skipped_zero_norm = 0;
};

OperatorNormReport operator_norm_study(const ExtensionMap& map,
                                       const std::vector<std::pair<std::string, ScalarField>>& suite,
                                       double p);

} // namespace sobex
