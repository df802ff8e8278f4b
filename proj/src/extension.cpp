#include "sobex/extension.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "sobex/errors.hpp"

namespace sobex {

ExtensionMap ExtensionMap::assemble(std::shared_ptr<const QuasiCubeFamily> qfam,
                                    std::shared_ptr<const BumpBasis> basis, const GridSpec& target) {
    const WhitneyFamily& fam = qfam->family();
    if (&fam != &basis->family())
        throw std::invalid_argument("assemble: quasi-cubes and bumps must share one Whitney family");
    const GridSpec& grid = fam.mask().grid();
    if (!(grid == target))
        throw std::invalid_argument("assemble: target grid must be the window grid of the mask");

    ExtensionMap map;
    map.qfam_ = std::move(qfam);
    map.basis_ = std::move(basis);
    map.target_ = target;

    const DomainMask& mask = fam.mask();
    const auto& dt = fam.dt();
    const int n = grid.dim();
    const double h = grid.spacing();
    const std::int64_t total = grid.total_cells();
    const double delta_S = map.qfam_->delta_S();
    // cubes with H_Q reach at most ~5.1 delta_S from S through Q*; beyond
    // that every row is zero and locate can be skipped
    const double reach = 5.2 * delta_S + 2.0 * h;

    map.kind_.assign(std::size_t(total), std::uint8_t(RowKind::Zero));
    map.row_ptr_.assign(std::size_t(total) + 1, 0);

    struct Chunk {
        std::vector<std::int32_t> cols;
        std::vector<double> weights;
        std::vector<std::int32_t> nnz; // per row in chunk
    };
    const std::int64_t chunk_size = 8192;
    const std::int64_t chunk_count = (total + chunk_size - 1) / chunk_size;
    std::vector<Chunk> chunks(static_cast<std::size_t>(chunk_count));

    std::int64_t bad_rows = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : bad_rows)
    for (std::int64_t ck = 0; ck < chunk_count; ++ck) {
        Chunk& chunk = chunks[std::size_t(ck)];
        const std::int64_t row_lo = ck * chunk_size;
        const std::int64_t row_hi = std::min(total, row_lo + chunk_size);
        chunk.nnz.assign(std::size_t(row_hi - row_lo), 0);
        std::vector<std::pair<std::int32_t, double>> entries;
        std::array<double, kMaxDim> x;
        for (CellIndex i = row_lo; i < row_hi; ++i) {
            if (mask.is_closed(i)) {
                map.kind_[std::size_t(i)] = std::uint8_t(RowKind::Identity);
                continue;
            }
            if (cell_region_dist(dt[std::size_t(i)], h) > reach) continue;
            CellCoord cc = grid.decode(i);
            for (int a = 0; a < n; ++a) x[std::size_t(a)] = grid.center_coord(cc[a], a);
            std::span<const double> xs(x.data(), std::size_t(n));
            auto phis = map.basis_->evaluate(xs);
            entries.clear();
            bool any_active = false, any_big = false;
            for (const auto& pv : phis) {
                const QuasiCubeEntry& e = map.qfam_->entry(pv.cube_id);
                if (!e.small) {
                    any_big = true;
                    continue; // P_{H_Q} u = 0 past delta_S
                }
                if (e.members.empty()) {
                    ++bad_rows; // construction guarantees nonempty; be loud
                    continue;
                }
                any_active = true;
                const double w = pv.phi / double(e.members.size());
                for (CellIndex m : e.members) entries.push_back({std::int32_t(m), w});
            }
            if (!any_active && dt[std::size_t(i)] <= 2) {
                // sub-resolution ring hugging S (no cube covers it): take the
                // nearest S cell's value so Eu stays continuous to O(h)
                CellCoord best;
                best.dim = 0;
                std::int64_t best_d = INT64_MAX;
                CellCoord nb;
                nb.dim = n;
                std::array<std::int64_t, kMaxDim> off{};
                for (int a = 0; a < n; ++a) off[std::size_t(a)] = -2;
                while (true) {
                    bool ok = true;
                    for (int a = 0; a < n; ++a) {
                        nb[a] = cc[a] + off[std::size_t(a)];
                        if (nb[a] < 0 || nb[a] >= grid.extent(a)) ok = false;
                    }
                    if (ok && mask.is_closed(grid.linear(nb))) {
                        std::int64_t d = 0;
                        for (int a = 0; a < n; ++a) d = std::max(d, std::abs(off[std::size_t(a)]));
                        bool better = d < best_d;
                        if (d == best_d && best.dim != 0) {
                            for (int a = 0; a < n; ++a) {
                                if (nb[a] < best[a]) { better = true; break; }
                                if (nb[a] > best[a]) break;
                            }
                        }
                        if (better) {
                            best_d = d;
                            best = nb;
                        }
                    }
                    int a = 0;
                    for (; a < n; ++a) {
                        if (++off[std::size_t(a)] <= 2) break;
                        off[std::size_t(a)] = -2;
                    }
                    if (a == n) break;
                }
                if (best.dim != 0) {
                    map.kind_[std::size_t(i)] = std::uint8_t(RowKind::Filled);
                    chunk.nnz[std::size_t(i - row_lo)] = 1;
                    chunk.cols.push_back(std::int32_t(grid.linear(best)));
                    chunk.weights.push_back(1.0);
                }
                continue;
            }
            if (!any_active) continue;
            std::sort(entries.begin(), entries.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            // merge duplicate columns (quasi-cubes overlap)
            std::size_t out = 0;
            for (std::size_t k = 0; k < entries.size(); ++k) {
                if (out > 0 && entries[out - 1].first == entries[k].first)
                    entries[out - 1].second += entries[k].second;
                else
                    entries[out++] = entries[k];
            }
            entries.resize(out);
            map.kind_[std::size_t(i)] =
                std::uint8_t(any_big ? RowKind::Partial : RowKind::Unit);
            chunk.nnz[std::size_t(i - row_lo)] = std::int32_t(entries.size());
            for (const auto& [c, w] : entries) {
                chunk.cols.push_back(c);
                chunk.weights.push_back(w);
            }
        }
    }
    if (bad_rows)
        throw regularity_violation_error("assemble: located cube with empty H_Q inside delta_S", {});

    // flatten chunks into CSR
    for (std::int64_t ck = 0, row = 0; ck < chunk_count; ++ck) {
        const Chunk& chunk = chunks[std::size_t(ck)];
        for (std::int32_t k : chunk.nnz) {
            map.row_ptr_[std::size_t(row) + 1] = map.row_ptr_[std::size_t(row)] + k;
            ++row;
        }
    }
    map.cols_.resize(std::size_t(map.row_ptr_[std::size_t(total)]));
    map.weights_.resize(map.cols_.size());
    {
        std::int64_t pos = 0;
        for (std::int64_t ck = 0; ck < chunk_count; ++ck) {
            Chunk& chunk = chunks[std::size_t(ck)];
            std::copy(chunk.cols.begin(), chunk.cols.end(), map.cols_.begin() + pos);
            std::copy(chunk.weights.begin(), chunk.weights.end(), map.weights_.begin() + pos);
            pos += std::int64_t(chunk.cols.size());
            chunk = {};
        }
    }

    ExtensionStats st;
    st.rows = total;
    st.nnz = std::int64_t(map.cols_.size());
    double min_w = 0.0, max_sum = 0.0;
    bool first_w = true;
    for (CellIndex i = 0; i < total; ++i) {
        const std::int64_t k = map.row_ptr_[std::size_t(i) + 1] - map.row_ptr_[std::size_t(i)];
        st.max_row_support = std::max(st.max_row_support, k);
        switch (RowKind(map.kind_[std::size_t(i)])) {
            case RowKind::Identity: ++st.identity_rows; break;
            case RowKind::Unit: ++st.unit_rows; break;
            case RowKind::Partial: ++st.partial_rows; break;
            case RowKind::Filled: ++st.filled_rows; break;
            case RowKind::Zero: break;
        }
        double s = 0.0;
        for (std::int64_t j = map.row_ptr_[std::size_t(i)]; j < map.row_ptr_[std::size_t(i) + 1]; ++j) {
            if (first_w || map.weights_[std::size_t(j)] < min_w) {
                min_w = map.weights_[std::size_t(j)];
                first_w = false;
            }
            s += map.weights_[std::size_t(j)];
        }
        max_sum = std::max(max_sum, s);
        if (RowKind(map.kind_[std::size_t(i)]) == RowKind::Unit && std::abs(s - 1.0) > 1e-12)
            throw invariant_violation("assemble: unit row does not sum to 1");
        if (s > 1.0 + 1e-12) throw invariant_violation("assemble: row sum exceeds 1");
    }
    if (!first_w && min_w < 0.0) throw invariant_violation("assemble: negative weight");
    st.layer_volume = double(st.unit_rows) * std::pow(h, n);
    st.min_weight = first_w ? 0.0 : min_w;
    st.max_row_sum = max_sum;
    map.stats_ = st;
    return map;
}

void ExtensionMap::apply_raw(const double* in, double* out) const {
    const std::int64_t total = target_.total_cells();
#pragma omp parallel for schedule(static)
    for (CellIndex i = 0; i < total; ++i) {
        switch (RowKind(kind_[std::size_t(i)])) {
            case RowKind::Identity:
                out[std::size_t(i)] = in[std::size_t(i)];
                break;
            case RowKind::Zero:
                out[std::size_t(i)] = 0.0;
                break;
            default: {
                double s = 0.0;
                for (std::int64_t j = row_ptr_[std::size_t(i)]; j < row_ptr_[std::size_t(i) + 1]; ++j)
                    s += weights_[std::size_t(j)] * in[std::size_t(cols_[std::size_t(j)])];
                out[std::size_t(i)] = s;
            }
        }
    }
}

ScalarField ExtensionMap::apply(const ScalarField& u) const {
    if (!(u.grid == target_)) throw std::invalid_argument("apply: field grid mismatch");
    ScalarField out(target_);
    apply_raw(u.values.data(), out.values.data());
    return out;
}

std::pair<std::span<const std::int32_t>, std::span<const double>> ExtensionMap::row(CellIndex i) const {
    const std::int64_t lo = row_ptr_[std::size_t(i)], hi = row_ptr_[std::size_t(i) + 1];
    return {std::span<const std::int32_t>(cols_.data() + lo, std::size_t(hi - lo)),
            std::span<const double>(weights_.data() + lo, std::size_t(hi - lo))};
}

void ExtensionMap::dump_stats_json(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out.precision(17);
    out << "{\"rows\":" << stats_.rows << ",\"nnz\":" << stats_.nnz
        << ",\"max_row_support\":" << stats_.max_row_support
        << ",\"identity_rows\":" << stats_.identity_rows << ",\"unit_rows\":" << stats_.unit_rows
        << ",\"partial_rows\":" << stats_.partial_rows << ",\"layer_volume\":" << stats_.layer_volume
        << "}\n";
}

OperatorNormReport operator_norm_study(const ExtensionMap& map,
                                       const std::vector<std::pair<std::string, ScalarField>>& suite,
                                       double p) {
    OperatorNormReport rep;
    rep.p = p;
    const DomainMask& mask = map.source_mask();
    for (const auto& [name, u] : suite) {
        SobolevReport src = sobolev_report(u, &mask, p, false);
        if (src.w1p_norm <= 0.0) {
            ++rep.skipped_zero_norm;
            continue;
        }
        ScalarField eu = map.apply(u);
        SobolevReport dst = sobolev_report(eu, nullptr, p, false);
        const double ratio = dst.w1p_norm / src.w1p_norm;
        if (ratio < 0.95)
            throw invariant_violation("operator_norm_study: extension lost mass on Omega (ratio < 0.95)");
        rep.names.push_back(name);
        rep.ratios.push_back(ratio);
        rep.max_ratio = std::max(rep.max_ratio, ratio);
    }
    return rep;
}

} // namespace sobex
