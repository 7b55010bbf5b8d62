#pragma once

#include "fairauc/dataset.hpp"
#include "fairauc/reformulation.hpp"
#include "fairauc/smd.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

namespace fairauc {

struct SflsConfig {
    /// Initial level; init_level() at the SMD start point when unset.
    std::optional<double> r0{};
    double eps_opt{ 1e-3 };
    double eps_oracle{ 1e-2 };
    double delta{ 0.05 };
    double theta{ 1.0 };
    std::size_t max_outer{ 50 };
    /// Base SMD iteration count T; call k runs ceil(T (1 + k ln 2 / ln(1/delta))) iterations.
    std::size_t oracle_iterations{ 1000 };
    double init_margin_rel{ 0.1 };
    double init_margin_abs{ 0.1 };
    /// Called after every oracle call with (k, r_k, U(r_k), x^(k)).
    std::function<void(std::size_t, double, double, const PrimalPoint &)> on_level{};
};

/// r + U / (2 theta)
[[nodiscard]] double update_level(double r, double U, double theta);

/// f0(x_init) + rel |f0(x_init)| + abs; exceeds the optimal value since f0(x_init) >= f*.
[[nodiscard]] double init_level(const ProblemSpec &spec, const Dataset &d, const PrimalPoint &x_init, double margin_rel = 0.1, double margin_abs = 0.1);

/// ceil(T (1 + k ln 2 / ln(1/delta))), the budget that tracks delta_k = delta / 2^k.
[[nodiscard]] std::size_t oracle_budget(std::size_t base_iterations, std::size_t k, double delta);

enum class HaltReason { Tolerance, MaxOuter };

struct LevelTraceRow {
    std::size_t k;
    double r;
    double upper_bound;
    std::size_t iterations;
    double wall_ms;
};

struct SflsResult {
    PrimalPoint solution;
    std::vector<LevelTraceRow> level_trace;
    HaltReason halted_by{ HaltReason::MaxOuter };
    /// (f1 - 1 - kappa, f2 - 1 - kappa) of the solution on the full training data.
    std::array<double, 2> final_feasibility{};
    std::size_t total_smd_steps{ 0 };
};

/**
 * Feasible level-set method. With smd_cfg.rho_hat > 0 the objective and constraints carry the
 * proximal term around smd_cfg.prox_center.
 */
[[nodiscard]] SflsResult run_sfls(const ProblemSpec &spec, const Dataset &d, const SflsConfig &cfg, const SmdConfig &smd_cfg);

/// Tolerances that give a relative eps-optimal solution for a known H(r0) < 0.
struct ReferenceTolerances {
    double eps_opt;
    double eps_oracle;
};

[[nodiscard]] ReferenceTolerances reference_tolerances(double H_r0, double eps, double theta);

void write_level_trace_csv(std::ostream &out, const std::vector<LevelTraceRow> &trace);

/// Deterministic per-call seed derived from a base seed and an index.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept;

}  // namespace fairauc
