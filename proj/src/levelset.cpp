#include "fairauc/levelset.hpp"

#include "fairauc/error.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

namespace fairauc {

namespace {

ObjectiveValues objective(const ProblemSpec &spec, const Dataset &d, const PrimalPoint &x, const SmdConfig &smd_cfg) {
    if (smd_cfg.rho_hat > 0.0) {
        const PrimalPoint &center = smd_cfg.prox_center ? *smd_cfg.prox_center : (smd_cfg.start ? *smd_cfg.start : x);
        return regularized_objective(spec, d, x, smd_cfg.rho_hat, center);
    }
    return full_objective(spec, d, x);
}

void validate(const SflsConfig &cfg) {
    if (!(cfg.eps_opt > 0.0) || !(cfg.eps_oracle > 0.0)) {
        throw InvalidArgument("eps_opt and eps_oracle must be positive");
    }
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) {
        throw InvalidArgument("delta must lie in (0, 1)");
    }
    if (!(cfg.theta >= 1.0)) {
        throw InvalidArgument("theta must be at least 1");
    }
    if (cfg.max_outer == 0 || cfg.oracle_iterations == 0) {
        throw InvalidArgument("max_outer and oracle_iterations must be positive");
    }
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
    // splitmix64 finalizer
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double update_level(double r, double U, double theta) {
    if (!(theta >= 1.0)) {
        throw InvalidArgument("theta must be at least 1");
    }
    return r + U / (2.0 * theta);
}

double init_level(const ProblemSpec &spec, const Dataset &d, const PrimalPoint &x_init, double margin_rel, double margin_abs) {
    const double f0 = full_objective(spec, d, x_init).f0;
    return f0 + margin_rel * std::abs(f0) + margin_abs;
}

std::size_t oracle_budget(std::size_t base_iterations, std::size_t k, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) {
        throw InvalidArgument("delta must lie in (0, 1)");
    }
    const double growth = 1.0 + static_cast<double>(k) * std::log(2.0) / std::log(1.0 / delta);
    return static_cast<std::size_t>(std::ceil(static_cast<double>(base_iterations) * growth));
}

SflsResult run_sfls(const ProblemSpec &spec, const Dataset &d, const SflsConfig &cfg, const SmdConfig &smd_cfg_in) {
    validate(cfg);
    const PrimalPoint x_init = smd_cfg_in.start ? *smd_cfg_in.start : zero_point(spec);
    double r = 0.0;
    if (cfg.r0) {
        r = *cfg.r0;
    } else {
        const double f0 = objective(spec, d, x_init, smd_cfg_in).f0;
        r = f0 + cfg.init_margin_rel * std::abs(f0) + cfg.init_margin_abs;
    }
    // M is fixed once so that every oracle call uses the same schedule
    const SmdConfig smd_cfg = resolve_smd_config(spec, d, smd_cfg_in, r);

    SflsResult result;
    std::optional<PrimalPoint> best;
    double best_f0 = 0.0;
    double best_violation = 0.0;
    bool best_feasible = false;

    for (std::size_t k = 0; k < cfg.max_outer; ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        SmdConfig call = smd_cfg;
        call.iterations = oracle_budget(cfg.oracle_iterations, k, cfg.delta);
        call.seed = derive_seed(smd_cfg.seed, k);
        OracleOutput out;
        try {
            out = run_smd(spec, d, call, r);
        } catch (const SolverError &e) {
            throw SolverError("SFLS outer iteration " + std::to_string(k) + ": " + e.what());
        }
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        result.level_trace.push_back(LevelTraceRow{ k, r, out.upper_bound, call.iterations, ms });
        result.total_smd_steps += call.iterations;
        if (cfg.on_level) {
            cfg.on_level(k, r, out.upper_bound, out.x_bar);
        }

        if (out.upper_bound >= -cfg.eps_opt) {
            result.solution = std::move(out.x_bar);
            result.halted_by = HaltReason::Tolerance;
            best.reset();
            break;
        }

        const ObjectiveValues vals = objective(spec, d, out.x_bar, smd_cfg);
        const double violation = vals.max_violation(spec.kappa);
        const bool feasible = violation <= 0.0;
        const bool better = !best || (feasible && (!best_feasible || vals.f0 < best_f0)) || (!feasible && !best_feasible && violation < best_violation);
        if (better) {
            best = out.x_bar;
            best_f0 = vals.f0;
            best_violation = violation;
            best_feasible = feasible;
        }
        r = update_level(r, out.upper_bound, cfg.theta);
    }
    if (result.halted_by == HaltReason::MaxOuter) {
        result.solution = std::move(*best);
    }
    const ObjectiveValues final_vals = objective(spec, d, result.solution, smd_cfg);
    result.final_feasibility = { final_vals.f1 - 1.0 - spec.kappa, final_vals.f2 - 1.0 - spec.kappa };
    return result;
}

ReferenceTolerances reference_tolerances(double H_r0, double eps, double theta) {
    if (!(theta >= 1.0)) {
        throw InvalidArgument("theta must be at least 1");
    }
    return { -H_r0 * eps / theta, -(theta - 1.0) / (2.0 * theta * theta * (theta + 1.0)) * H_r0 * eps };
}

void write_level_trace_csv(std::ostream &out, const std::vector<LevelTraceRow> &trace) {
    out << "k,r,U,T,wall_ms\n";
    out.precision(12);
    for (const LevelTraceRow &row : trace) {
        out << row.k << ',' << row.r << ',' << row.upper_bound << ',' << row.iterations << ',' << row.wall_ms << '\n';
    }
}

}  // namespace fairauc
