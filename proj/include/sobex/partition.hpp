#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "sobex/whitney.hpp"

namespace sobex {

/// 1-D plateau profile: 1 on [-1,1], 0 outside [-9/8, 9/8], quintic C^2
/// ramp in between. The product bump psi_Q(x) = prod_i rho((x_i-c_i)/r_Q)
/// is then identically 1 on Q and supported in Q*.
double bump_profile(double t);
double bump_profile_derivative(double t);

struct PartitionValue {
    std::int32_t cube_id;
    double phi;
};

/// Smooth partition of unity subordinate to the Whitney family:
/// phi_Q = psi_Q / sum_K psi_K. On every point covered by an accepted cube
/// the denominator is >= 1.
class BumpBasis {
public:
    static BumpBasis build(std::shared_ptr<const WhitneyFamily> family, std::int64_t probe_count = 4096,
                           std::uint64_t probe_seed = 7);

    const WhitneyFamily& family() const { return *family_; }
    std::shared_ptr<const WhitneyFamily> family_ptr() const { return family_; }
    double derivative_bound_constant() const { return derivative_bound_constant_; }

    double psi(std::int32_t cube_id, std::span<const double> x) const;
    void psi_gradient(std::int32_t cube_id, std::span<const double> x, std::span<double> grad) const;

    /// Normalized values over locate(x); sums to 1 wherever some psi > 0.
    std::vector<PartitionValue> evaluate(std::span<const double> x) const;

    /// phi values and gradients (quotient rule over the located cubes).
    std::vector<PartitionValue> evaluate_with_gradients(std::span<const double> x,
                                                        std::vector<std::vector<double>>& grads) const;

private:
    std::shared_ptr<const WhitneyFamily> family_;
    double derivative_bound_constant_ = 0.0;
};

} // namespace sobex
