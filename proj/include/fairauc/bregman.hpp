#pragma once

#include "fairauc/model.hpp"
#include "fairauc/reformulation.hpp"

#include <Eigen/Core>

#include <array>

namespace fairauc {

/// I and the entropy weight s = 2 (1 + sqrt(2) I)^2 of omega_y.
struct GeometryParams {
    double interval_radius{ 1.0 };
    double entropy_scale{ 2.0 * (1.0 + 1.4142135623730951) * (1.0 + 1.4142135623730951) };

    [[nodiscard]] static GeometryParams from_radius(double interval_radius);
};

/// sum_i alpha~_i^2 / y~_{group(i)}, with 0 for a zero denominator. Throws if y is not in Y.
[[nodiscard]] double d_y(const DualPoint &y, double interval_radius);

/// s (sum y~ ln y~ + ln 3) + d_y(y)
[[nodiscard]] double omega_y(const DualPoint &y, const GeometryParams &g);

/// Bregman divergence of omega_y. `yp` must have a strictly positive simplex part.
[[nodiscard]] double v_y(const DualPoint &y, const DualPoint &yp, const GeometryParams &g);

/// ||y~ - y~'||_1^2 + ||alpha~ - alpha~'||_2^2, square root taken.
[[nodiscard]] double norm12(const DualPoint &a, const DualPoint &b);

/// sqrt(||u||_inf^2 + ||v||_2^2), the norm dual to ||.||_{1,2}.
[[nodiscard]] double dual_norm(const DualGradient &g);

/// argmin_{y in Y} -u.y~ - v.alpha~ + V_y(y, yp) / tau + d_y(y), in closed form.
[[nodiscard]] DualPoint dual_prox(const std::array<double, kNumGroups> &u, const std::array<double, kNumPairs> &v, const DualPoint &yp, double tau, const GeometryParams &g);

/**
 * argmin_{x in X} <grad, x> + ||x - x_t||^2 / (2 eta) + (rho_hat / 2) ||x - center||^2.
 * `grad` and the result use the flat (weights, ab) layout.
 */
[[nodiscard]] PrimalPoint primal_prox(const Eigen::Ref<const Eigen::VectorXd> &grad, const PrimalPoint &x_t, double eta, double rho_hat, const PrimalPoint &center, const ParamDomain &dom,
                                      const GeometryParams &g);

/// max_{y in Y} u.y~ + v.alpha~ - d_y(y) + dx_term, in closed form.
[[nodiscard]] double upper_bound(const std::array<double, kNumGroups> &u, const std::array<double, kNumPairs> &v, const GeometryParams &g, double dx_term);

}  // namespace fairauc
