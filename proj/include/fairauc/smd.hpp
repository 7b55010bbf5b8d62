#pragma once

#include "fairauc/bregman.hpp"
#include "fairauc/dataset.hpp"
#include "fairauc/reformulation.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

namespace fairauc {

struct SmdConfig {
    std::size_t iterations{ 1000 };
    /// M in the step sizes; estimated from a warm-up pass when unset.
    std::optional<double> step_scale{};
    /// D_x, D_y; derived from the domains when unset.
    std::optional<double> dx{};
    std::optional<double> dy{};
    double rho_hat{ 0.0 };
    /// Center of the (rho_hat / 2) ||x - center||^2 term; defaults to the start point.
    std::optional<PrimalPoint> prox_center{};
    /// x^(0); the origin of X when unset.
    std::optional<PrimalPoint> start{};
    /// Minibatch size; 0 means the full dataset (deterministic mode).
    std::size_t batch_size{ 100 };
    std::uint64_t seed{ 0 };
    bool record_trace{ false };
    /// Calls `on_snapshot(t, x_t)` for t = k * snapshot_every, k >= 1. 0 disables.
    std::size_t snapshot_every{ 0 };
    std::function<void(std::size_t, const PrimalPoint &)> on_snapshot{};
    /// Snapshot the running average of x^(0..t) (what the oracle would output if stopped at t)
    /// instead of the raw iterate.
    bool snapshot_average{ false };
};

struct StepSizes {
    double eta;
    double tau;
};

/// eta_t = 2 D_x^2 / (M sqrt(t + 1)), tau_t = 2 D_y^2 / (M sqrt(t + 1)). Needs M, D_x, D_y set.
[[nodiscard]] StepSizes step_sizes(std::size_t t, const SmdConfig &cfg);

/// sqrt(max omega_x - min omega_x) over X = ball(R) x [-I, I]^10.
[[nodiscard]] double primal_diameter(const ProblemSpec &spec);
/// sqrt(max omega_y - min omega_y) over Y.
[[nodiscard]] double dual_diameter(const GeometryParams &g);

/**
 * 3 x the root mean square of sqrt(2 D_x^2 ||g_x||^2 + 2 D_y^2 ||g_y||_*^2) over `samples`
 * single-point gradients at (x0, uniform y).
 */
[[nodiscard]] double estimate_step_scale(const ProblemSpec &spec, const Dataset &d, const PrimalPoint &x0, double dx, double dy, double r, std::uint64_t seed, std::size_t samples = 100);

/// Fills unset M, D_x, D_y. M is estimated at level r.
[[nodiscard]] SmdConfig resolve_smd_config(const ProblemSpec &spec, const Dataset &d, SmdConfig cfg, double r);

struct SmdTraceRow {
    std::size_t t;
    double eta;
    double tau;
    std::array<double, kNumGroups> y;
    double x_norm;
    double running_upper_bound;
};

struct OracleOutput {
    double upper_bound{ 0.0 };
    PrimalPoint x_bar;
    DualPoint y_bar;
    std::vector<SmdTraceRow> trace;
    /// Step scale and diameters actually used.
    double step_scale{ 0.0 };
    double dx{ 0.0 };
    double dy{ 0.0 };
};

/// Stochastic mirror descent on the saddle problem at level r.
[[nodiscard]] OracleOutput run_smd(const ProblemSpec &spec, const Dataset &d, const SmdConfig &cfg, double r);

void write_smd_trace_csv(std::ostream &out, const std::vector<SmdTraceRow> &trace);

/// Reference constants of the sub-Gaussian analysis. Not estimated from data.
struct ComplexityConstants {
    double sigma{ 1.0 };
    double M_x{ 1.0 };
    double M_y{ 1.0 };
    double Q{ 1.0 };

    /// max{ sqrt(12 ln(24/delta)), (4/3) ln(24/delta) }
    [[nodiscard]] static double omega(double delta);
    /// sqrt(2 D_x^2 M_x^2 + 2 D_y^2 M_y^2)
    [[nodiscard]] double step_scale(double dx, double dy) const;
    /// Iteration count after which SMD is an eps_oracle-accurate oracle with probability 1 - delta.
    [[nodiscard]] double iteration_bound(double delta, double eps_oracle, double dx, double dy) const;
};

}  // namespace fairauc
