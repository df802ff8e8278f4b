#include "sobex/grid.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace sobex {

GridSpec::GridSpec(std::vector<double> origin, double spacing, std::vector<std::int64_t> extents)
    : dim_(int(origin.size())), origin_(std::move(origin)), spacing_(spacing), extents_(std::move(extents)) {
    if (dim_ < 1 || dim_ > kMaxDim) throw std::invalid_argument("GridSpec: dim must be in [1,4]");
    if (!(spacing_ > 0.0)) throw std::invalid_argument("GridSpec: spacing must be positive");
    if (int(extents_.size()) != dim_) throw std::invalid_argument("GridSpec: extents/origin size mismatch");
    total_ = 1;
    for (auto e : extents_) {
        if (e <= 0) throw std::invalid_argument("GridSpec: extents must be positive");
        total_ *= e;
    }
    if (total_ >= (std::int64_t(1) << 31))
        throw std::invalid_argument("GridSpec: total cell count must be < 2^31");
    // row-major: axis 0 slowest, last axis contiguous
    strides_.assign(std::size_t(dim_), 1);
    for (int a = dim_ - 2; a >= 0; --a)
        strides_[std::size_t(a)] = strides_[std::size_t(a) + 1] * extents_[std::size_t(a) + 1];
}

CellCoord GridSpec::cell_of_point(std::span<const double> x) const {
    CellCoord c;
    c.dim = dim_;
    for (int a = 0; a < dim_; ++a)
        c[a] = std::int64_t(std::floor((x[std::size_t(a)] - origin_[std::size_t(a)]) / spacing_));
    return c;
}

void GridSpec::bbox(std::vector<double>& lo, std::vector<double>& hi) const {
    lo = origin_;
    hi.resize(std::size_t(dim_));
    for (int a = 0; a < dim_; ++a)
        hi[std::size_t(a)] = origin_[std::size_t(a)] + double(extents_[std::size_t(a)]) * spacing_;
}

bool GridSpec::is_dyadic_window() const {
    std::int64_t e = extents_[0];
    for (auto x : extents_) if (x != e) return false;
    return e > 0 && (e & (e - 1)) == 0;
}

bool GridSpec::operator==(const GridSpec& o) const {
    if (dim_ != o.dim_ || extents_ != o.extents_) return false;
    if (std::abs(spacing_ - o.spacing_) > 1e-12 * spacing_) return false;
    for (int a = 0; a < dim_; ++a)
        if (std::abs(origin_[std::size_t(a)] - o.origin_[std::size_t(a)]) > 1e-9 * spacing_) return false;
    return true;
}

GridSpec make_window_grid(std::span<const double> center, double spacing, std::int64_t cells_per_axis) {
    std::vector<double> origin(center.size());
    for (std::size_t a = 0; a < center.size(); ++a)
        origin[a] = center[a] - 0.5 * double(cells_per_axis) * spacing;
    return GridSpec(origin, spacing, std::vector<std::int64_t>(center.size(), cells_per_axis));
}

} // namespace sobex
