#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sobex/field.hpp"
#include "sobex/product.hpp"

namespace sobex {

/// Closed-form test functions with closed-form first derivatives.
struct Generator1D {
    std::string name;
    std::function<double(double)> f, df;
};

struct Generator2D {
    std::string name;
    std::function<double(double, double)> f, fx, fy;
};

std::vector<Generator1D> suite_smooth_1d();
std::vector<Generator2D> suite_smooth_2d();
/// Jump family around a slit tip: discontinuous across the slit ray,
/// C^1 elsewhere. Includes two smooth controls.
std::vector<Generator2D> suite_jump_slit(double tip_x, double tip_y);
/// Step functions for the punctured-interval converse experiment.
std::vector<Generator1D> suite_jump_1d(double jump_at);

/// Resolve a 2-D suite by name: "smooth2d", "jump_slit".
std::vector<Generator2D> get_suite_2d(const std::string& name);

ScalarField sample_field(const Generator1D& g, const GridSpec& grid,
                         std::shared_ptr<const DomainMask> mask = nullptr);
ScalarField sample_field(const Generator2D& g, const GridSpec& grid,
                         std::shared_ptr<const DomainMask> mask = nullptr);

/// Product samples u(x,y) = g(x,y) for 1-D x 1-D factors; the generator's
/// two arguments are the factor coordinates.
ProductField sample_product(const Generator2D& g, const GridSpec& gx, const GridSpec& gy,
                            std::shared_ptr<const DomainMask> mx, std::shared_ptr<const DomainMask> my);
ProductField sample_product_derivative(const Generator2D& g, bool wrt_y, const GridSpec& gx,
                                       const GridSpec& gy, std::shared_ptr<const DomainMask> mx,
                                       std::shared_ptr<const DomainMask> my);

} // namespace sobex
