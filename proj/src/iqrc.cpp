#include "fairauc/iqrc.hpp"

#include "fairauc/error.hpp"

#include <cmath>
#include <ostream>
#include <random>
#include <string>

namespace fairauc {

PrimalPoint feasible_start(const ProblemSpec &spec, std::uint64_t seed) {
    PrimalPoint x = zero_point(spec);
    if (spec.shape.kind == ModelKind::Mlp2) {
        x.model = project_params(random_mlp2(spec.shape.input_dim, spec.shape.hidden, seed, true), spec.domain);
    }
    return x;
}

IqrcResult run_iqrc(const ProblemSpec &spec, const Dataset &d, const IqrcConfig &cfg, const SflsConfig &sfls_cfg, const SmdConfig &smd_cfg, const std::optional<PrimalPoint> &x0) {
    if (!(cfg.rho_hat > 0.0) || cfg.outer_iterations == 0 || !(cfg.eps_hat > 0.0)) {
        throw InvalidArgument("IQRC needs rho_hat > 0, eps_hat > 0 and at least one outer iteration");
    }
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) {
        throw InvalidArgument("delta must lie in (0, 1)");
    }
    const double tol = cfg.eps_hat * cfg.eps_hat;

    IqrcResult result;
    PrimalPoint center = x0 ? *x0 : feasible_start(spec, cfg.seed);
    if (!in_primal_domain(spec, center) || full_objective(spec, d, center).max_violation(spec.kappa) > tol) {
        center = feasible_start(spec, cfg.seed);
        result.used_fallback_start = true;
    }
    result.iterates.push_back(center);

    const std::size_t S = cfg.outer_iterations;
    for (std::size_t s = 0; s < S; ++s) {
        SflsConfig inner = sfls_cfg;
        inner.eps_opt = tol;
        inner.delta = cfg.delta / static_cast<double>(S);
        inner.r0.reset();
        SmdConfig smd = smd_cfg;
        smd.rho_hat = cfg.rho_hat;
        smd.prox_center = center;
        smd.start = center;
        smd.seed = derive_seed(cfg.seed, s);

        SflsResult sub;
        try {
            sub = run_sfls(spec, d, inner, smd);
        } catch (const Error &e) {
            throw SolverError("IQRC outer iteration " + std::to_string(s) + ": " + e.what());
        }
        const double violation = regularized_objective(spec, d, sub.solution, cfg.rho_hat, center).max_violation(spec.kappa);
        const bool accepted = violation <= tol;
        PrimalPoint next = accepted ? sub.solution : center;
        const double disp = (flatten(next) - flatten(center)).norm();
        result.displacement_trace.push_back(IqrcTraceRow{ s, disp, sub.level_trace.size(), sub.total_smd_steps, accepted });
        center = std::move(next);
        result.iterates.push_back(center);
    }

    Rng rng{ derive_seed(cfg.seed, S + 1) };
    result.chosen_index = std::uniform_int_distribution<std::size_t>{ 0, S }(rng);
    result.solution = result.iterates[result.chosen_index];
    return result;
}

double eps_hat_formula(double eps, double rho_hat, double rho, double G, double dx, double sigma_eps) {
    if (!(rho_hat > rho) || !(sigma_eps > 0.0) || !(eps > 0.0)) {
        throw InvalidArgument("eps_hat_formula needs rho_hat > rho, sigma_eps > 0 and eps > 0");
    }
    const double gap = rho_hat - rho;
    const double factor = std::sqrt(gap / 4.0) * std::pow((G + 2.0 * rho_hat * dx) / std::sqrt(2.0 * sigma_eps * gap) + 1.0, -0.5);
    return std::min(1.0, factor) * eps;
}

SufficientConditionReport sufficient_condition(const ProblemSpec &spec, double rho) {
    const double R = spec.domain.radius;
    const double I = spec.interval_radius;
    const double diam_sq = 4.0 * R * R + static_cast<double>(kNumAb) * 4.0 * I * I;
    const double slack = spec.kappa + 1.0 - 2.0 * spec.c1 * spec.c2 * spec.c2;
    const double bound = 2.0 * slack / diam_sq;
    return SufficientConditionReport{ slack > 0.0, rho < bound, bound, diam_sq };
}

void write_displacement_trace_csv(std::ostream &out, const std::vector<IqrcTraceRow> &trace) {
    out << "s,displacement,inner_outer_iterations,inner_smd_steps,accepted\n";
    out.precision(12);
    for (const IqrcTraceRow &row : trace) {
        out << row.s << ',' << row.displacement << ',' << row.inner_outer_iterations << ',' << row.inner_smd_steps << ',' << (row.accepted ? 1 : 0) << '\n';
    }
}

}  // namespace fairauc
