#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace sobex {

/// Axis-aligned cube Q(x, r) in the uniform norm: {y : ||y - x||_inf <= r}.
/// Every cube is a ball of the infinity norm; diam Q equals the side 2r.
struct Cube {
    std::vector<double> center;
    double half_side = 0.0;

    Cube() = default;
    Cube(std::vector<double> c, double r) : center(std::move(c)), half_side(r) {}

    int dim() const { return int(center.size()); }
    double diam() const { return 2.0 * half_side; }

    /// lambda * Q: same center, scaled half-side. dilated(9.0/8.0) is Q*.
    Cube dilated(double lambda) const { return Cube(center, lambda * half_side); }

    bool contains(std::span<const double> x, double dilation = 1.0) const {
        const double r = dilation * half_side;
        for (std::size_t i = 0; i < center.size(); ++i)
            if (std::abs(x[i] - center[i]) > r) return false;
        return true;
    }

    double lo(int axis) const { return center[axis] - half_side; }
    double hi(int axis) const { return center[axis] + half_side; }
};

inline double dist_inf(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

/// Uniform-norm distance between two cubes (0 if they intersect).
inline double cube_dist_inf(const Cube& a, const Cube& b) {
    double d = 0.0;
    for (int i = 0; i < a.dim(); ++i) {
        double gap = std::abs(a.center[i] - b.center[i]) - a.half_side - b.half_side;
        d = std::max(d, gap);
    }
    return std::max(d, 0.0);
}

inline bool cubes_intersect(const Cube& a, const Cube& b, double dilation = 1.0) {
    for (int i = 0; i < a.dim(); ++i) {
        if (std::abs(a.center[i] - b.center[i]) >
            dilation * (a.half_side + b.half_side))
            return false;
    }
    return true;
}

} // namespace sobex
