#include "sobex/partition.hpp"

#include <cmath>

#include "sobex/errors.hpp"
#include "sobex/rng.hpp"

namespace sobex {

double bump_profile(double t) {
    double a = std::abs(t);
    if (a <= 1.0) return 1.0;
    if (a >= 9.0 / 8.0) return 0.0;
    double s = 8.0 * (a - 1.0); // in (0,1)
    double s3 = s * s * s;
    return 1.0 - (10.0 * s3 - 15.0 * s3 * s + 6.0 * s3 * s * s);
}

double bump_profile_derivative(double t) {
    double a = std::abs(t);
    if (a <= 1.0 || a >= 9.0 / 8.0) return 0.0;
    double s = 8.0 * (a - 1.0);
    double ds = 30.0 * s * s * (1.0 - s) * (1.0 - s);
    return (t > 0 ? -1.0 : 1.0) * 8.0 * ds;
}

double BumpBasis::psi(std::int32_t cube_id, std::span<const double> x) const {
    const auto ctr = family_->cube_center(cube_id);
    const double r = family_->cube_half_side(cube_id);
    double v = 1.0;
    for (std::size_t a = 0; a < ctr.size(); ++a)
        v *= bump_profile((x[a] - ctr[a]) / r);
    return v;
}

void BumpBasis::psi_gradient(std::int32_t cube_id, std::span<const double> x, std::span<double> grad) const {
    const auto ctr = family_->cube_center(cube_id);
    const double r = family_->cube_half_side(cube_id);
    const int n = int(ctr.size());
    std::array<double, kMaxDim> rho, drho;
    for (int a = 0; a < n; ++a) {
        double t = (x[std::size_t(a)] - ctr[std::size_t(a)]) / r;
        rho[std::size_t(a)] = bump_profile(t);
        drho[std::size_t(a)] = bump_profile_derivative(t) / r;
    }
    for (int a = 0; a < n; ++a) {
        double g = drho[std::size_t(a)];
        for (int b = 0; b < n; ++b)
            if (b != a) g *= rho[std::size_t(b)];
        grad[std::size_t(a)] = g;
    }
}

std::vector<PartitionValue> BumpBasis::evaluate(std::span<const double> x) const {
    std::vector<std::int32_t> ids = family_->locate(x);
    std::vector<PartitionValue> out;
    out.reserve(ids.size());
    double total = 0.0;
    for (std::int32_t id : ids) {
        double v = psi(id, x);
        if (v > 0.0) out.push_back({id, v});
        total += v;
    }
    if (total <= 0.0) return {};
    for (auto& pv : out) pv.phi /= total;
    return out;
}

std::vector<PartitionValue> BumpBasis::evaluate_with_gradients(std::span<const double> x,
                                                               std::vector<std::vector<double>>& grads) const {
    std::vector<std::int32_t> ids = family_->locate(x);
    const int n = family_->mask().grid().dim();
    std::vector<PartitionValue> vals;
    std::vector<std::vector<double>> psi_grads;
    double total = 0.0;
    std::array<double, kMaxDim> total_grad{};
    for (std::int32_t id : ids) {
        double v = psi(id, x);
        std::vector<double> g(static_cast<std::size_t>(n));
        psi_gradient(id, x, g);
        total += v;
        for (int a = 0; a < n; ++a) total_grad[std::size_t(a)] += g[std::size_t(a)];
        vals.push_back({id, v});
        psi_grads.push_back(std::move(g));
    }
    grads.clear();
    if (total <= 0.0) return {};
    for (std::size_t k = 0; k < vals.size(); ++k) {
        std::vector<double> g(static_cast<std::size_t>(n));
        for (int a = 0; a < n; ++a)
            g[std::size_t(a)] = (psi_grads[k][std::size_t(a)] * total -
                                 vals[k].phi * total_grad[std::size_t(a)]) /
                                (total * total);
        vals[k].phi /= total;
        grads.push_back(std::move(g));
    }
    return vals;
}

BumpBasis BumpBasis::build(std::shared_ptr<const WhitneyFamily> family, std::int64_t probe_count,
                           std::uint64_t probe_seed) {
    BumpBasis basis;
    basis.family_ = std::move(family);
    const WhitneyFamily& fam = *basis.family_;
    const GridSpec& grid = fam.mask().grid();
    const int n = grid.dim();
    Rng rng(probe_seed);

    // Coverage probes: at any point inside an accepted cube the raw sum of
    // bumps must be >= 1 (psi_Q == 1 there).
    const auto& cubes = fam.cubes();
    if (!cubes.empty()) {
        for (std::int64_t k = 0; k < probe_count; ++k) {
            const WhitneyCube& q = cubes[std::size_t(rng.next_below(cubes.size()))];
            std::array<double, kMaxDim> x;
            for (int a = 0; a < n; ++a) {
                double lo = grid.origin()[std::size_t(a)] +
                            double(q.cell_lo[std::size_t(a)]) * grid.spacing();
                x[std::size_t(a)] = lo + rng.next_double() * double(q.width) * grid.spacing();
            }
            std::span<const double> xs(x.data(), std::size_t(n));
            double total = 0.0;
            for (std::int32_t id : fam.locate(xs)) total += basis.psi(id, xs);
            if (total < 1.0 - 1e-12)
                throw invariant_violation("build_partition: coverage error, bump sum < 1 inside a cube");
        }
    }

    // Measure the property-(d) constant: max |grad phi_Q| * diam Q over
    // probes in Q*.
    double c_best = 0.0;
    const std::size_t cube_sample = std::min<std::size_t>(cubes.size(), 256);
    for (std::size_t s = 0; s < cube_sample; ++s) {
        std::int32_t id = std::int32_t(cubes.size() <= cube_sample ? s : rng.next_below(cubes.size()));
        const double r = fam.cube_half_side(id);
        auto ctr = fam.cube_center(id);
        for (int probe = 0; probe < 24; ++probe) {
            std::array<double, kMaxDim> x;
            for (int a = 0; a < n; ++a)
                x[std::size_t(a)] = ctr[std::size_t(a)] + rng.uniform(-9.0 / 8.0, 9.0 / 8.0) * r;
            std::span<const double> xs(x.data(), std::size_t(n));
            CellCoord cc = grid.cell_of_point(xs);
            if (!grid.in_bounds(cc)) continue;
            if (fam.mask().is_closed(grid.linear(cc))) continue;
            std::vector<std::vector<double>> grads;
            auto vals = basis.evaluate_with_gradients(xs, grads);
            for (std::size_t k = 0; k < vals.size(); ++k) {
                if (vals[k].cube_id != id) continue;
                double g = 0.0;
                for (int a = 0; a < n; ++a) g = std::max(g, std::abs(grads[k][std::size_t(a)]));
                c_best = std::max(c_best, g * fam.cube_diam(id));
            }
        }
    }
    basis.derivative_bound_constant_ = c_best;
    return basis;
}

} // namespace sobex
