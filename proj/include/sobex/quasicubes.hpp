#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sobex/whitney.hpp"

namespace sobex {

/// Which cells count as S when materializing H_Q. The closed set is the
/// default; counting open cells only is a diagnostic mode that degenerates
/// on sets whose boundary layer carries the measure (slit-type domains).
enum class SCellSource { Closed, Open };

struct QuasiCubeEntry {
    CellIndex a_cell = -1;               // nearest closed cell to the cube center
    std::vector<CellIndex> members;      // H_Q as grid cells (empty for big cubes)
    std::vector<std::int32_t> removals;  // A_Q, ids of cubes whose K_eps was subtracted
    bool small = false;                  // diam <= delta_S
    bool floor_exempt = false;           // diam < 4h/eps: resolution floor
};

struct QuasiCubeCertification {
    std::int64_t small_count = 0;
    std::int64_t certified_count = 0; // small, not floor-exempt, not window-edge
    std::int64_t floor_count = 0;
    std::int64_t window_edge_count = 0;    // excluded from the measured constants
    std::int64_t containment_failures = 0; // Theorem (i): H_Q subset 10Q cap S
    std::int64_t disjoint_failures = 0;    // H_Q cap K_eps nonempty for K in A_Q
    std::int64_t empty_quasicubes = 0;     // among non-edge small cubes (throws)
    std::int64_t empty_edge_quasicubes = 0; // finite-window artifacts, reported only
    double gamma1 = 0.0; // max |Q| / |H_Q| over certified cubes
    int gamma2 = 0;      // max pointwise overlap of the non-edge H_Q
};

/// The quasi-cube family H_Q: for each Whitney cube Q with diam <= delta_S,
/// H_Q = (Q_eps cap S) \ union{K_eps : K in A_Q} realized as grid cells.
/// Cubes below the resolution floor 4h/eps keep H_Q = Q_eps cap S.
class QuasiCubeFamily {
public:
    static QuasiCubeFamily build(std::shared_ptr<const WhitneyFamily> family, double epsilon,
                                 double delta_S, SCellSource source = SCellSource::Closed);

    const WhitneyFamily& family() const { return *family_; }
    std::shared_ptr<const WhitneyFamily> family_ptr() const { return family_; }
    double epsilon() const { return epsilon_; }
    double delta_S() const { return delta_S_; }
    SCellSource source() const { return source_; }

    const QuasiCubeEntry& entry(std::int32_t cube_id) const { return entries_[std::size_t(cube_id)]; }
    const std::vector<QuasiCubeEntry>& entries() const { return entries_; }

    /// K_eps = Q(a_K, eps r_K); meaningful for small cubes only.
    Cube reflected_cube(std::int32_t cube_id) const;

    double gamma1() const { return cert_.gamma1; }
    int gamma2() const { return cert_.gamma2; }
    const QuasiCubeCertification& certification() const { return cert_; }

    /// Exact histogram: overlap count -> number of S cells with that count.
    std::map<int, std::int64_t> overlap_histogram() const;

    void dump_jsonl(const std::string& path) const;

private:
    std::shared_ptr<const WhitneyFamily> family_;
    double epsilon_ = 0.5;
    double delta_S_ = 0.0;
    SCellSource source_ = SCellSource::Closed;
    std::vector<QuasiCubeEntry> entries_;
    std::vector<std::int32_t> overlap_count_; // per grid cell
    QuasiCubeCertification cert_;
};

} // namespace sobex
