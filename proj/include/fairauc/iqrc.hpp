#pragma once

#include "fairauc/dataset.hpp"
#include "fairauc/levelset.hpp"
#include "fairauc/reformulation.hpp"
#include "fairauc/smd.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace fairauc {

struct IqrcConfig {
    double rho_hat{ 1e-5 };
    std::size_t outer_iterations{ 10 };
    /// Inner tolerance; each subproblem is solved to eps_hat^2.
    double eps_hat{ 0.1 };
    double delta{ 0.05 };
    std::uint64_t seed{ 0 };
};

struct IqrcTraceRow {
    std::size_t s;
    double displacement;
    std::size_t inner_outer_iterations;
    std::size_t inner_smd_steps;
    /// False when the inner solution broke the regularized constraints by more than eps_hat^2
    /// and the previous center was kept.
    bool accepted;
};

struct IqrcResult {
    PrimalPoint solution;
    std::vector<IqrcTraceRow> displacement_trace;
    std::size_t chosen_index{ 0 };
    /// x~(0), ..., x~(S)
    std::vector<PrimalPoint> iterates;
    /// Set when the supplied start was infeasible and the constant scorer was used instead.
    bool used_fallback_start{ false };
};

/// A point whose scorer is the constant 0, with a = b = 0. For Mlp2 the hidden layer is random
/// (seeded) and the output layer zero, so gradients can break the symmetry of the hidden units.
[[nodiscard]] PrimalPoint feasible_start(const ProblemSpec &spec, std::uint64_t seed);

/**
 * Proximal-point loop for weakly convex scorers. Subproblem s is solved by SFLS with the
 * proximal term centred at x~(s), warm-started at x~(s). `smd_cfg.rho_hat`, `prox_center`,
 * `start` and `seed` and `sfls_cfg.eps_opt`, `delta` are overridden per subproblem.
 */
[[nodiscard]] IqrcResult run_iqrc(const ProblemSpec &spec, const Dataset &d, const IqrcConfig &cfg, const SflsConfig &sfls_cfg, const SmdConfig &smd_cfg,
                                  const std::optional<PrimalPoint> &x0 = std::nullopt);

/// min{1, sqrt((rho_hat - rho)/4) ((G + 2 rho_hat D_x) / sqrt(2 sigma_eps (rho_hat - rho)) + 1)^(-1/2)} eps
[[nodiscard]] double eps_hat_formula(double eps, double rho_hat, double rho, double G, double dx, double sigma_eps);

struct SufficientConditionReport {
    bool kappa_ok;
    bool rho_ok;
    /// 2 (kappa + 1 - 2 c1 c2^2) / max ||x - x'||^2
    double rho_bound;
    double diameter_sq;

    [[nodiscard]] bool holds() const noexcept { return kappa_ok && rho_ok; }
};

/// Checks 2 c1 c2^2 - 1 < kappa and rho < rho_bound for the spec's domain. Report only.
[[nodiscard]] SufficientConditionReport sufficient_condition(const ProblemSpec &spec, double rho);

void write_displacement_trace_csv(std::ostream &out, const std::vector<IqrcTraceRow> &trace);

}  // namespace fairauc
