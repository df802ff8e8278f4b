#include "sobex/suites.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sobex {

namespace {
constexpr double pi = std::numbers::pi;
}

std::vector<Generator1D> suite_smooth_1d() {
    std::vector<Generator1D> out;
    out.push_back({"const1", [](double) { return 1.0; }, [](double) { return 0.0; }});
    out.push_back({"linear", [](double x) { return x; }, [](double) { return 1.0; }});
    out.push_back({"quadratic", [](double x) { return x * x; }, [](double x) { return 2.0 * x; }});
    out.push_back({"cubic", [](double x) { return x * x * x - x; },
                   [](double x) { return 3.0 * x * x - 1.0; }});
    out.push_back({"sin_pi", [](double x) { return std::sin(pi * x); },
                   [](double x) { return pi * std::cos(pi * x); }});
    out.push_back({"cos_2pi", [](double x) { return std::cos(2.0 * pi * x); },
                   [](double x) { return -2.0 * pi * std::sin(2.0 * pi * x); }});
    out.push_back({"gauss", [](double x) { return std::exp(-4.0 * (x - 0.5) * (x - 0.5)); },
                   [](double x) {
                       return -8.0 * (x - 0.5) * std::exp(-4.0 * (x - 0.5) * (x - 0.5));
                   }});
    out.push_back({"sin3_decay", [](double x) { return std::sin(3.0 * x) * std::exp(-x); },
                   [](double x) {
                       return std::exp(-x) * (3.0 * std::cos(3.0 * x) - std::sin(3.0 * x));
                   }});
    out.push_back({"logistic", [](double x) { return 1.0 / (1.0 + std::exp(-6.0 * (x - 0.5))); },
                   [](double x) {
                       double s = 1.0 / (1.0 + std::exp(-6.0 * (x - 0.5)));
                       return 6.0 * s * (1.0 - s);
                   }});
    out.push_back({"poly4", [](double x) { return x * x * (1.0 - x) * (1.0 - x); },
                   [](double x) { return 2.0 * x * (1.0 - x) * (1.0 - 2.0 * x); }});
    return out;
}

std::vector<Generator2D> suite_smooth_2d() {
    std::vector<Generator2D> out;
    out.push_back({"const1", [](double, double) { return 1.0; }, [](double, double) { return 0.0; },
                   [](double, double) { return 0.0; }});
    out.push_back({"x", [](double x, double) { return x; }, [](double, double) { return 1.0; },
                   [](double, double) { return 0.0; }});
    out.push_back({"y", [](double, double y) { return y; }, [](double, double) { return 0.0; },
                   [](double, double) { return 1.0; }});
    out.push_back({"xy", [](double x, double y) { return x * y; },
                   [](double, double y) { return y; }, [](double x, double) { return x; }});
    out.push_back({"saddle", [](double x, double y) { return x * x - y * y; },
                   [](double x, double) { return 2.0 * x; },
                   [](double, double y) { return -2.0 * y; }});
    out.push_back({"harmonic3", [](double x, double y) { return x * x * x - 3.0 * x * y * y; },
                   [](double x, double y) { return 3.0 * x * x - 3.0 * y * y; },
                   [](double x, double y) { return -6.0 * x * y; }});
    out.push_back({"sin_sin", [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); },
                   [](double x, double y) { return pi * std::cos(pi * x) * std::sin(pi * y); },
                   [](double x, double y) { return pi * std::sin(pi * x) * std::cos(pi * y); }});
    out.push_back({"cos_cos2",
                   [](double x, double y) { return std::cos(pi * x) * std::cos(2.0 * pi * y); },
                   [](double x, double y) { return -pi * std::sin(pi * x) * std::cos(2.0 * pi * y); },
                   [](double x, double y) {
                       return -2.0 * pi * std::cos(pi * x) * std::sin(2.0 * pi * y);
                   }});
    out.push_back({"sin_diag", [](double x, double y) { return std::sin(pi * (x + y)); },
                   [](double x, double y) { return pi * std::cos(pi * (x + y)); },
                   [](double x, double y) { return pi * std::cos(pi * (x + y)); }});
    out.push_back({"gauss2",
                   [](double x, double y) {
                       return std::exp(-4.0 * ((x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5)));
                   },
                   [](double x, double y) {
                       return -8.0 * (x - 0.5) *
                              std::exp(-4.0 * ((x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5)));
                   },
                   [](double x, double y) {
                       return -8.0 * (y - 0.5) *
                              std::exp(-4.0 * ((x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5)));
                   }});
    return out;
}

std::vector<Generator2D> suite_jump_slit(double tip_x, double tip_y) {
    // angle around the tip measured so the slit ray (pointing -x from the
    // tip) is the branch cut: theta in (0, 2pi], the function jumps across
    // the slit. A radial plateau keeps the support near the slit, so the
    // ratio growth measures the slit and not the operator's far field.
    auto theta = [tip_x, tip_y](double x, double y) {
        double a = std::atan2(y - tip_y, x - tip_x) - pi; // in (-2pi, 0]
        if (a <= 0.0) a += 2.0 * pi;                      // in (0, 2pi]
        return a;
    };
    auto grad_theta_x = [tip_x, tip_y](double x, double y) {
        double dx = x - tip_x, dy = y - tip_y;
        double r2 = dx * dx + dy * dy;
        return r2 > 0 ? -dy / r2 : 0.0;
    };
    auto grad_theta_y = [tip_x, tip_y](double x, double y) {
        double dx = x - tip_x, dy = y - tip_y;
        double r2 = dx * dx + dy * dy;
        return r2 > 0 ? dx / r2 : 0.0;
    };
    constexpr double r0 = 0.2, r1 = 0.45;
    auto smooth5 = [](double s) { return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s); };
    auto dsmooth5 = [](double s) { return 30.0 * s * s * (1.0 - s) * (1.0 - s); };
    auto psi = [=](double x, double y) {
        double r = std::hypot(x - tip_x, y - tip_y);
        if (r <= r0) return 1.0;
        if (r >= r1) return 0.0;
        return 1.0 - smooth5((r - r0) / (r1 - r0));
    };
    auto dpsi = [=](double x, double y, bool wrt_y) {
        double dx = x - tip_x, dy = y - tip_y;
        double r = std::hypot(dx, dy);
        if (r <= r0 || r >= r1) return 0.0;
        double dr = -dsmooth5((r - r0) / (r1 - r0)) / (r1 - r0);
        return dr * (wrt_y ? dy : dx) / r;
    };
    // q profiles on s = theta / 2pi with q(0+) != q(1-): the jump
    struct Profile {
        const char* name;
        double (*q)(double);
        double (*dq)(double);
    };
    static const Profile profiles[] = {
        {"angle_linear", [](double s) { return s; }, [](double) { return 1.0; }},
        {"angle_sin2", [](double s) { return std::sin(0.5 * pi * s) * std::sin(0.5 * pi * s); },
         [](double s) { return 0.5 * pi * std::sin(pi * s); }},
        {"angle_cubic", [](double s) { return s * s * (3.0 - 2.0 * s); },
         [](double s) { return 6.0 * s * (1.0 - s); }},
        {"angle_scaled", [](double s) { return 2.0 * s - 0.5; }, [](double) { return 2.0; }},
    };
    std::vector<Generator2D> out;
    for (const Profile& pr : profiles) {
        auto q = pr.q;
        auto dq = pr.dq;
        out.push_back(
            {pr.name,
             [=](double x, double y) { return q(theta(x, y) / (2.0 * pi)) * psi(x, y); },
             [=](double x, double y) {
                 double s = theta(x, y) / (2.0 * pi);
                 return dq(s) * grad_theta_x(x, y) / (2.0 * pi) * psi(x, y) +
                        q(s) * dpsi(x, y, false);
             },
             [=](double x, double y) {
                 double s = theta(x, y) / (2.0 * pi);
                 return dq(s) * grad_theta_y(x, y) / (2.0 * pi) * psi(x, y) +
                        q(s) * dpsi(x, y, true);
             }});
    }
    // hard unit jump across the slit on a compact plateau ending before the
    // tip; constant on each side of the slit, so the jump carries all the
    // refinement growth
    {
        auto plat = [smooth5](double t, double a0, double a1, double b1, double b0) {
            if (t <= a0 || t >= b0) return 0.0;
            if (t < a1) return smooth5((t - a0) / (a1 - a0));
            if (t <= b1) return 1.0;
            return 1.0 - smooth5((t - b1) / (b0 - b1));
        };
        auto dplat = [smooth5, dsmooth5](double t, double a0, double a1, double b1, double b0) {
            (void)smooth5;
            if (t <= a0 || t >= b0) return 0.0;
            if (t < a1) return dsmooth5((t - a0) / (a1 - a0)) / (a1 - a0);
            if (t <= b1) return 0.0;
            return -dsmooth5((t - b1) / (b0 - b1)) / (b0 - b1);
        };
        double tx = tip_x, ty = tip_y;
        auto px = [=](double x) { return plat(x - (tx - 0.5), 0.05, 0.15, 0.35, 0.45); };
        auto dpx = [=](double x) { return dplat(x - (tx - 0.5), 0.05, 0.15, 0.35, 0.45); };
        auto py = [=](double y) { return plat(std::abs(y - ty), -1.0, -0.5, 0.25, 0.35); };
        auto dpy = [=](double y) {
            double s = y - ty >= 0 ? 1.0 : -1.0;
            return s * dplat(std::abs(y - ty), -1.0, -0.5, 0.25, 0.35);
        };
        out.push_back({"band_step",
                       [=](double x, double y) { return (y > ty ? 1.0 : 0.0) * px(x) * py(y); },
                       [=](double x, double y) { return (y > ty ? 1.0 : 0.0) * dpx(x) * py(y); },
                       [=](double x, double y) { return (y > ty ? 1.0 : 0.0) * px(x) * dpy(y); }});
    }
    return out;
}

std::vector<Generator1D> suite_jump_1d(double jump_at) {
    std::vector<Generator1D> out;
    out.push_back({"step", [jump_at](double x) { return x > jump_at ? 1.0 : 0.0; },
                   [](double) { return 0.0; }});
    out.push_back({"step_linear", [jump_at](double x) { return x > jump_at ? 1.0 + 0.5 * x : 0.5 * x; },
                   [](double) { return 0.5; }});
    return out;
}

std::vector<Generator2D> get_suite_2d(const std::string& name) {
    if (name == "smooth2d") return suite_smooth_2d();
    if (name == "jump_slit") return suite_jump_slit(0.5, 0.5);
    throw std::invalid_argument("unknown suite: " + name);
}

ScalarField sample_field(const Generator1D& g, const GridSpec& grid,
                         std::shared_ptr<const DomainMask> mask) {
    if (grid.dim() != 1) throw std::invalid_argument("sample_field: 1-D generator on non-1-D grid");
    ScalarField u(grid, std::move(mask));
    for (CellIndex i = 0; i < grid.total_cells(); ++i) u[i] = g.f(grid.center_coord(i, 0));
    return u;
}

ScalarField sample_field(const Generator2D& g, const GridSpec& grid,
                         std::shared_ptr<const DomainMask> mask) {
    if (grid.dim() != 2) throw std::invalid_argument("sample_field: 2-D generator on non-2-D grid");
    ScalarField u(grid, std::move(mask));
    const std::int64_t total = grid.total_cells();
#pragma omp parallel for schedule(static)
    for (CellIndex i = 0; i < total; ++i) {
        CellCoord c = grid.decode(i);
        u[i] = g.f(grid.center_coord(c[0], 0), grid.center_coord(c[1], 1));
    }
    return u;
}

ProductField sample_product(const Generator2D& g, const GridSpec& gx, const GridSpec& gy,
                            std::shared_ptr<const DomainMask> mx,
                            std::shared_ptr<const DomainMask> my) {
    if (gx.dim() != 1 || gy.dim() != 1)
        throw std::invalid_argument("sample_product: 1-D factors expected");
    ProductField u(gx, gy, std::move(mx), std::move(my));
    for (CellIndex y = 0; y < u.ny(); ++y) {
        const double yc = gy.center_coord(y, 0);
        double* s = u.slice(y);
        for (CellIndex x = 0; x < u.nx(); ++x) s[std::size_t(x)] = g.f(gx.center_coord(x, 0), yc);
    }
    return u;
}

ProductField sample_product_derivative(const Generator2D& g, bool wrt_y, const GridSpec& gx,
                                       const GridSpec& gy, std::shared_ptr<const DomainMask> mx,
                                       std::shared_ptr<const DomainMask> my) {
    ProductField u(gx, gy, std::move(mx), std::move(my));
    for (CellIndex y = 0; y < u.ny(); ++y) {
        const double yc = gy.center_coord(y, 0);
        double* s = u.slice(y);
        for (CellIndex x = 0; x < u.nx(); ++x) {
            const double xc = gx.center_coord(x, 0);
            s[std::size_t(x)] = wrt_y ? g.fy(xc, yc) : g.fx(xc, yc);
        }
    }
    return u;
}

} // namespace sobex
