#include "fairauc/bregman.hpp"

#include "fairauc/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fairauc {

namespace {

void require_in_dual(const DualPoint &y, double interval_radius) {
    if (!in_dual_domain(y, interval_radius)) {
        throw InvalidArgument("dual point is not in Y");
    }
}

void require_interior(const DualPoint &y) {
    for (const double v : y.y) {
        if (!(v > 0.0)) {
            throw InvalidArgument("reference dual point must have a strictly positive simplex part");
        }
    }
}

}  // namespace

GeometryParams GeometryParams::from_radius(double interval_radius) {
    if (!(interval_radius > 0.0)) {
        throw InvalidArgument("interval radius must be positive");
    }
    const double t = 1.0 + std::sqrt(2.0) * interval_radius;
    return GeometryParams{ interval_radius, 2.0 * t * t };
}

double d_y(const DualPoint &y, double interval_radius) {
    require_in_dual(y, interval_radius);
    double out = 0.0;
    for (std::size_t i = 0; i < kNumPairs; ++i) {
        const double denom = y.y[kPairGroup[i]];
        if (denom > 0.0) {
            out += y.alpha[i] * y.alpha[i] / denom;
        }
    }
    return out;
}

double omega_y(const DualPoint &y, const GeometryParams &g) {
    const double dy = d_y(y, g.interval_radius);
    double ent = std::log(3.0);
    for (const double v : y.y) {
        if (v > 0.0) {
            ent += v * std::log(v);
        }
    }
    return g.entropy_scale * ent + dy;
}

double v_y(const DualPoint &y, const DualPoint &yp, const GeometryParams &g) {
    require_interior(yp);
    require_in_dual(y, g.interval_radius);
    double kl = 0.0;
    for (std::size_t k = 0; k < kNumGroups; ++k) {
        if (y.y[k] > 0.0) {
            kl += y.y[k] * std::log(y.y[k] / yp.y[k]);
        }
    }
    double quad = 0.0;
    for (std::size_t i = 0; i < kNumPairs; ++i) {
        const std::size_t grp = kPairGroup[i];
        if (y.y[grp] > 0.0) {
            const double diff = y.alpha[i] / y.y[grp] - yp.alpha[i] / yp.y[grp];
            quad += y.y[grp] * diff * diff;
        }
    }
    return g.entropy_scale * kl + quad;
}

double norm12(const DualPoint &a, const DualPoint &b) {
    double l1 = 0.0;
    for (std::size_t k = 0; k < kNumGroups; ++k) {
        l1 += std::abs(a.y[k] - b.y[k]);
    }
    double l2 = 0.0;
    for (std::size_t i = 0; i < kNumPairs; ++i) {
        l2 += (a.alpha[i] - b.alpha[i]) * (a.alpha[i] - b.alpha[i]);
    }
    return std::sqrt(l1 * l1 + l2);
}

double dual_norm(const DualGradient &g) {
    double inf = 0.0;
    for (const double u : g.u) {
        inf = std::max(inf, std::abs(u));
    }
    double l2 = 0.0;
    for (const double v : g.v) {
        l2 += v * v;
    }
    return std::sqrt(inf * inf + l2);
}

DualPoint dual_prox(const std::array<double, kNumGroups> &u, const std::array<double, kNumPairs> &v, const DualPoint &yp, double tau, const GeometryParams &g) {
    if (!(tau > 0.0)) {
        throw InvalidArgument("dual_prox needs tau > 0");
    }
    require_interior(yp);
    const double I = g.interval_radius;

    std::array<double, kNumPairs> alpha{};
    std::array<double, kNumGroups> mu{};
    for (std::size_t i = 0; i < kNumPairs; ++i) {
        const double ap = yp.alpha[i] / yp.y[kPairGroup[i]];
        const double a = std::clamp((v[i] + 2.0 * ap / tau) / (2.0 + 2.0 / tau), -I, I);
        alpha[i] = a;
        mu[kPairGroup[i]] += -a * v[i] + a * a + (a - ap) * (a - ap) / tau;
    }

    // log pi_g = log y'_g - (mu_g - u_g) tau / s, normalized with the max subtracted
    std::array<double, kNumGroups> logits{};
    for (std::size_t k = 0; k < kNumGroups; ++k) {
        logits[k] = std::log(yp.y[k]) - (mu[k] - u[k]) * tau / g.entropy_scale;
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    std::array<double, kNumGroups> pi{};
    for (std::size_t k = 0; k < kNumGroups; ++k) {
        pi[k] = std::exp(logits[k] - top);
        total += pi[k];
    }
    DualPoint out;
    for (std::size_t k = 0; k < kNumGroups; ++k) {
        // keep the iterate interior when a weight underflows
        out.y[k] = std::max(pi[k] / total, std::numeric_limits<double>::min());
    }
    for (std::size_t i = 0; i < kNumPairs; ++i) {
        out.alpha[i] = out.y[kPairGroup[i]] * alpha[i];
    }
    return out;
}

PrimalPoint primal_prox(const Eigen::Ref<const Eigen::VectorXd> &grad, const PrimalPoint &x_t, double eta, double rho_hat, const PrimalPoint &center, const ParamDomain &dom,
                        const GeometryParams &g) {
    if (!(eta > 0.0)) {
        throw InvalidArgument("primal_prox needs eta > 0");
    }
    if (!(rho_hat >= 0.0)) {
        throw InvalidArgument("primal_prox needs rho_hat >= 0");
    }
    const Eigen::VectorXd xt = flatten(x_t);
    if (grad.size() != xt.size()) {
        throw InvalidArgument("gradient length does not match the primal point");
    }
    Eigen::VectorXd x;
    if (rho_hat > 0.0) {
        x = (xt / eta + rho_hat * flatten(center) - grad) / (1.0 / eta + rho_hat);
    } else {
        x = xt - eta * grad;
    }
    PrimalPoint out = unflatten(x_t.model.shape, x);
    out.model = project_params(std::move(out.model), dom);
    for (double &v : out.ab) {
        v = std::clamp(v, -g.interval_radius, g.interval_radius);
    }
    return out;
}

double upper_bound(const std::array<double, kNumGroups> &u, const std::array<double, kNumPairs> &v, const GeometryParams &g, double dx_term) {
    const double I = g.interval_radius;
    std::array<double, kNumPairs> mu{};
    for (std::size_t i = 0; i < kNumPairs; ++i) {
        const double a = std::clamp(v[i] / 2.0, -I, I);
        mu[i] = a * v[i] - a * a;
    }
    return std::max({ u[0] + mu[0], u[1] + mu[1] + mu[2], u[2] + mu[3] + mu[4] }) + dx_term;
}

}  // namespace fairauc
