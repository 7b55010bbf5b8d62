#include "fairauc/smd.hpp"

#include "fairauc/error.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace fairauc {

namespace {

void validate(const SmdConfig &cfg) {
    if (cfg.iterations == 0) {
        throw InvalidArgument("SMD needs at least one iteration");
    }
    const auto positive = [](const std::optional<double> &v) { return !v || (*v > 0.0 && std::isfinite(*v)); };
    if (!positive(cfg.step_scale) || !positive(cfg.dx) || !positive(cfg.dy)) {
        throw InvalidArgument("SMD step scale and diameters must be positive");
    }
    if (!(cfg.rho_hat >= 0.0)) {
        throw InvalidArgument("rho_hat must be nonnegative");
    }
}

DualPoint average_dual(const std::array<double, kNumGroups> &ysum, const std::array<double, kNumPairs> &asum, double count, double I) {
    DualPoint out;
    double total = 0.0;
    for (std::size_t k = 0; k < kNumGroups; ++k) {
        out.y[k] = ysum[k] / count;
        total += out.y[k];
    }
    for (double &v : out.y) {
        v /= total;
    }
    for (std::size_t i = 0; i < kNumPairs; ++i) {
        const double bound = out.y[kPairGroup[i]] * I;
        out.alpha[i] = std::clamp(asum[i] / count, -bound, bound);
    }
    return out;
}

}  // namespace

StepSizes step_sizes(std::size_t t, const SmdConfig &cfg) {
    if (!cfg.step_scale || !cfg.dx || !cfg.dy) {
        throw InvalidArgument("step_sizes needs M, D_x and D_y");
    }
    const double denom = *cfg.step_scale * std::sqrt(static_cast<double>(t) + 1.0);
    return { 2.0 * *cfg.dx * *cfg.dx / denom, 2.0 * *cfg.dy * *cfg.dy / denom };
}

double primal_diameter(const ProblemSpec &spec) {
    const double R = spec.domain.radius;
    const double I = spec.interval_radius;
    return std::sqrt(0.5 * (R * R + static_cast<double>(kNumAb) * I * I));
}

double dual_diameter(const GeometryParams &g) {
    // omega_y is 0 at the uniform point and largest at y~ = e_1 (or e_2) with both alphas at +-I
    return std::sqrt(g.entropy_scale * std::log(3.0) + 2.0 * g.interval_radius * g.interval_radius);
}

double estimate_step_scale(const ProblemSpec &spec, const Dataset &d, const PrimalPoint &x0, double dx, double dy, double r, std::uint64_t seed, std::size_t samples) {
    Rng rng{ seed };
    BatchGradient bg{ spec };
    const DualPoint y0{};
    const auto idx = sample_indices(d.size(), samples, rng);
    double acc = 0.0;
    for (const std::size_t k : idx) {
        bg.evaluate(x0, y0, d, std::span<const std::size_t>{ &k, 1 }, r);
        const double gy = dual_norm(bg.gy());
        acc += 2.0 * dx * dx * bg.gx().squaredNorm() + 2.0 * dy * dy * gy * gy;
    }
    const double m = 3.0 * std::sqrt(acc / static_cast<double>(samples));
    if (!(m > 0.0) || !std::isfinite(m)) {
        throw SolverError("step scale estimate is not positive and finite");
    }
    return m;
}

SmdConfig resolve_smd_config(const ProblemSpec &spec, const Dataset &d, SmdConfig cfg, double r) {
    validate(cfg);
    const GeometryParams g = GeometryParams::from_radius(spec.interval_radius);
    if (!cfg.dx) {
        cfg.dx = primal_diameter(spec);
    }
    if (!cfg.dy) {
        cfg.dy = dual_diameter(g);
    }
    if (!cfg.step_scale) {
        const PrimalPoint x0 = cfg.start ? *cfg.start : zero_point(spec);
        cfg.step_scale = estimate_step_scale(spec, d, x0, *cfg.dx, *cfg.dy, r, cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    }
    return cfg;
}

OracleOutput run_smd(const ProblemSpec &spec, const Dataset &d, const SmdConfig &cfg_in, double r) {
    const SmdConfig cfg = resolve_smd_config(spec, d, cfg_in, r);
    const GeometryParams g = GeometryParams::from_radius(spec.interval_radius);
    const double I = spec.interval_radius;

    PrimalPoint x = cfg.start ? *cfg.start : zero_point(spec);
    if (!(x.model.shape == spec.shape)) {
        throw InvalidArgument("SMD start point does not match the problem's model shape");
    }
    x.model = project_params(std::move(x.model), spec.domain);
    for (double &v : x.ab) {
        v = std::clamp(v, -I, I);
    }
    const PrimalPoint center = cfg.prox_center ? *cfg.prox_center : x;
    const Eigen::VectorXd center_flat = flatten(center);
    DualPoint y{};

    Rng rng{ cfg.seed };
    BatchGradient bg{ spec };
    std::vector<std::size_t> idx;
    if (cfg.batch_size > 0) {
        idx.resize(cfg.batch_size);
    }
    std::uniform_int_distribution<std::size_t> pick{ 0, d.size() - 1 };

    double tau_sum = 0.0;
    std::array<double, kNumGroups> u_acc{};
    std::array<double, kNumPairs> v_acc{};
    double dx_acc = 0.0;
    Eigen::VectorXd x_sum = Eigen::VectorXd::Zero(center_flat.size());
    std::array<double, kNumGroups> y_sum{};
    std::array<double, kNumPairs> a_sum{};

    OracleOutput out;
    if (cfg.record_trace) {
        out.trace.reserve(cfg.iterations);
    }
    for (std::size_t t = 0; t < cfg.iterations; ++t) {
        const StepSizes step = step_sizes(t, cfg);
        for (auto &k : idx) {
            k = pick(rng);
        }
        bg.evaluate(x, y, d, idx, r);
        if (!bg.gx().allFinite()) {
            std::ostringstream msg;
            msg << "non-finite primal gradient at SMD iteration " << t << " (level r = " << r << ", |w| = " << x.model.weights.norm() << ")";
            throw SolverError(msg.str());
        }
        const DualGradient &gy = bg.gy();
        for (std::size_t k = 0; k < kNumGroups; ++k) {
            u_acc[k] += step.tau * gy.u[k];
            y_sum[k] += y.y[k];
        }
        for (std::size_t i = 0; i < kNumPairs; ++i) {
            v_acc[i] += step.tau * gy.v[i];
            a_sum[i] += y.alpha[i];
        }
        const Eigen::VectorXd x_flat = flatten(x);
        if (cfg.rho_hat > 0.0) {
            dx_acc += step.tau * 0.5 * cfg.rho_hat * (x_flat - center_flat).squaredNorm();
        }
        tau_sum += step.tau;
        x_sum += x_flat;

        if (cfg.snapshot_every > 0 && t > 0 && t % cfg.snapshot_every == 0 && cfg.on_snapshot) {
            if (cfg.snapshot_average) {
                PrimalPoint avg = unflatten(spec.shape, x_sum / static_cast<double>(t + 1));
                avg.model = project_params(std::move(avg.model), spec.domain);
                for (double &v : avg.ab) {
                    v = std::clamp(v, -I, I);
                }
                cfg.on_snapshot(t, avg);
            } else {
                cfg.on_snapshot(t, x);
            }
        }
        if (cfg.record_trace) {
            std::array<double, kNumGroups> um{};
            std::array<double, kNumPairs> vm{};
            for (std::size_t k = 0; k < kNumGroups; ++k) {
                um[k] = u_acc[k] / tau_sum;
            }
            for (std::size_t i = 0; i < kNumPairs; ++i) {
                vm[i] = v_acc[i] / tau_sum;
            }
            out.trace.push_back(SmdTraceRow{ t, step.eta, step.tau, y.y, x_flat.norm(), upper_bound(um, vm, g, dx_acc / tau_sum) });
        }

        x = primal_prox(bg.gx(), x, step.eta, cfg.rho_hat, center, spec.domain, g);
        y = dual_prox(gy.u, gy.v, y, step.tau, g);
    }

    std::array<double, kNumGroups> um{};
    std::array<double, kNumPairs> vm{};
    for (std::size_t k = 0; k < kNumGroups; ++k) {
        um[k] = u_acc[k] / tau_sum;
    }
    for (std::size_t i = 0; i < kNumPairs; ++i) {
        vm[i] = v_acc[i] / tau_sum;
    }
    out.upper_bound = upper_bound(um, vm, g, dx_acc / tau_sum);

    const double T = static_cast<double>(cfg.iterations);
    out.x_bar = unflatten(spec.shape, x_sum / T);
    out.x_bar.model = project_params(std::move(out.x_bar.model), spec.domain);
    for (double &v : out.x_bar.ab) {
        v = std::clamp(v, -I, I);
    }
    out.y_bar = average_dual(y_sum, a_sum, T, I);
    out.step_scale = *cfg.step_scale;
    out.dx = *cfg.dx;
    out.dy = *cfg.dy;
    return out;
}

void write_smd_trace_csv(std::ostream &out, const std::vector<SmdTraceRow> &trace) {
    out << "t,eta,tau,y0,y1,y2,x_norm,running_U\n";
    out.precision(12);
    for (const SmdTraceRow &row : trace) {
        out << row.t << ',' << row.eta << ',' << row.tau << ',' << row.y[0] << ',' << row.y[1] << ',' << row.y[2] << ',' << row.x_norm << ',' << row.running_upper_bound << '\n';
    }
}

double ComplexityConstants::omega(double delta) {
    if (!(delta > 0.0 && delta < 1.0)) {
        throw InvalidArgument("delta must lie in (0, 1)");
    }
    const double l = std::log(24.0 / delta);
    return std::max(std::sqrt(12.0 * l), 4.0 / 3.0 * l);
}

double ComplexityConstants::step_scale(double dx, double dy) const {
    return std::sqrt(2.0 * dx * dx * M_x * M_x + 2.0 * dy * dy * M_y * M_y);
}

double ComplexityConstants::iteration_bound(double delta, double eps_oracle, double dx, double dy) const {
    if (!(eps_oracle > 0.0)) {
        throw InvalidArgument("eps_oracle must be positive");
    }
    const double om = omega(delta);
    const double M = step_scale(dx, dy);
    const double K = Q * om + 10.0 * M * om + 4.5 * M;
    const double inner = 16.0 * K / eps_oracle * std::log(8.0 * K / eps_oracle);
    return std::max(6.0, inner * inner - 2.0);
}

}  // namespace fairauc
