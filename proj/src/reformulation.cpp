#include "fairauc/reformulation.hpp"

#include "fairauc/error.hpp"

#include <cmath>
#include <string>

namespace fairauc {

namespace {

struct PairWeights {
    double wg;
    double wgp;
};

PairWeights pair_weights(const ProblemSpec &spec, std::size_t i, const DataPoint &z) noexcept {
    const SelectorPair &p = spec.pairs[i];
    return { p.g.matches(z) ? 1.0 / spec.probs[i][0] : 0.0, p.gp.matches(z) ? 1.0 / spec.probs[i][1] : 0.0 };
}

double kernel_F(const ProblemSpec &spec, double h, double a, double b, PairWeights w) noexcept {
    const double c1 = spec.c1;
    const double c2 = spec.c2;
    return c1 * c2 * c2 - 2.0 * c1 * c2 * h * w.wg + 2.0 * c1 * c2 * h * w.wgp + c1 * (h - a) * (h - a) * w.wg + c1 * (h - b) * (h - b) * w.wgp;
}

double kernel_G(const ProblemSpec &spec, double h, PairWeights w) noexcept {
    return 2.0 * spec.c1 * h * (w.wg - w.wgp);
}

void check_pair(std::size_t i) {
    if (i >= kNumPairs) {
        throw InvalidArgument("pair index " + std::to_string(i) + " out of range [0, 4]");
    }
}

}  // namespace

std::array<SelectorPair, kNumPairs> canonical_pairs(FairnessKind kind) noexcept {
    const GroupQuad q = group_pairs_for(kind);
    return { SelectorPair{ kPositives, kNegatives }, SelectorPair{ q.g1p, q.g1 }, SelectorPair{ q.g2, q.g2p }, SelectorPair{ q.g2p, q.g2 }, SelectorPair{ q.g1, q.g1p } };
}

ProblemSpec make_problem_spec(const Dataset &train, const ProblemOptions &opts) {
    if (!(opts.c1 > 0.0) || !(opts.c2 > 0.0)) {
        throw InvalidArgument("c1 and c2 must be positive");
    }
    if (!(opts.kappa >= 0.0)) {
        throw InvalidArgument("kappa must be nonnegative");
    }
    if (!(opts.domain.radius > 0.0)) {
        throw InvalidArgument("domain radius must be positive");
    }
    ProblemSpec spec;
    spec.c1 = opts.c1;
    spec.c2 = opts.c2;
    spec.kappa = opts.kappa;
    spec.kind = opts.kind;
    spec.pairs = canonical_pairs(opts.kind);
    for (std::size_t i = 0; i < kNumPairs; ++i) {
        const std::array<const GroupSelector *, 2> sels{ &spec.pairs[i].g, &spec.pairs[i].gp };
        for (std::size_t k = 0; k < 2; ++k) {
            spec.probs[i][k] = group_probability(train, *sels[k]);
            if (!(spec.probs[i][k] > 0.0)) {
                throw InvalidArgument("group " + sels[k]->name() + " has no training points");
            }
        }
    }
    spec.shape = ModelShape{ opts.model, train.dim(), opts.hidden };
    spec.domain = opts.domain;
    spec.score_bound = score_bound(opts.domain, train, opts.model, opts.hidden);
    const double radius = opts.interval_radius.value_or(2.0 * spec.score_bound + 1.0);
    if (!(radius >= 2.0 * spec.score_bound) || !std::isfinite(radius)) {
        throw InvalidArgument("interval radius " + std::to_string(radius) + " is below 2 * score_bound = " + std::to_string(2.0 * spec.score_bound));
    }
    spec.interval_radius = radius;
    return spec;
}

PrimalPoint zero_point(const ProblemSpec &spec) {
    return PrimalPoint{ ModelParams::zeros(spec.shape), {} };
}

Eigen::VectorXd flatten(const PrimalPoint &x) {
    const Eigen::Index nw = x.model.weights.size();
    Eigen::VectorXd out(nw + static_cast<Eigen::Index>(kNumAb));
    out.head(nw) = x.model.weights;
    for (std::size_t k = 0; k < kNumAb; ++k) {
        out(nw + static_cast<Eigen::Index>(k)) = x.ab[k];
    }
    return out;
}

PrimalPoint unflatten(const ModelShape &shape, const Eigen::Ref<const Eigen::VectorXd> &flat) {
    const auto nw = static_cast<Eigen::Index>(shape.parameter_count());
    if (flat.size() != nw + static_cast<Eigen::Index>(kNumAb)) {
        throw InvalidArgument("flat primal vector has wrong length");
    }
    PrimalPoint x{ ModelParams{ shape, flat.head(nw) }, {} };
    for (std::size_t k = 0; k < kNumAb; ++k) {
        x.ab[k] = flat(nw + static_cast<Eigen::Index>(k));
    }
    return x;
}

bool in_primal_domain(const ProblemSpec &spec, const PrimalPoint &x, double tol) {
    if (!x.model.weights.allFinite() || x.model.weights.norm() > spec.domain.radius + tol) {
        return false;
    }
    return std::all_of(x.ab.begin(), x.ab.end(), [&](double v) { return std::isfinite(v) && std::abs(v) <= spec.interval_radius + tol; });
}

bool in_dual_domain(const DualPoint &y, double interval_radius, double tol) {
    double sum = 0.0;
    for (const double v : y.y) {
        if (!(v >= -tol)) {
            return false;
        }
        sum += v;
    }
    if (std::abs(sum - 1.0) > tol) {
        return false;
    }
    for (std::size_t i = 0; i < kNumPairs; ++i) {
        if (!(std::abs(y.alpha[i]) <= y.y[kPairGroup[i]] * interval_radius + tol)) {
            return false;
        }
    }
    return true;
}

double sample_F(const ProblemSpec &spec, const PrimalPoint &x, const DataPoint &z, std::size_t i) {
    check_pair(i);
    const double h = score(x.model, z.features);
    return kernel_F(spec, h, x.ab[2 * i], x.ab[2 * i + 1], pair_weights(spec, i, z));
}

double sample_G(const ProblemSpec &spec, const ModelParams &m, const DataPoint &z, std::size_t i) {
    check_pair(i);
    return kernel_G(spec, score(m, z.features), pair_weights(spec, i, z));
}

std::array<double, kNumGroups> F_vector(const ProblemSpec &spec, const PrimalPoint &x, const DataPoint &z, double r) {
    const double h = score(x.model, z.features);
    std::array<double, kNumPairs> F{};
    for (std::size_t i = 0; i < kNumPairs; ++i) {
        F[i] = kernel_F(spec, h, x.ab[2 * i], x.ab[2 * i + 1], pair_weights(spec, i, z));
    }
    return { F[0] - r, F[1] + F[2] - 1.0 - spec.kappa, F[3] + F[4] - 1.0 - spec.kappa };
}

std::array<double, kNumPairs> G_vector(const ProblemSpec &spec, const ModelParams &m, const DataPoint &z) {
    const double h = score(m, z.features);
    std::array<double, kNumPairs> G{};
    for (std::size_t i = 0; i < kNumPairs; ++i) {
        G[i] = kernel_G(spec, h, pair_weights(spec, i, z));
    }
    return G;
}

double phi(const ProblemSpec &spec, const PrimalPoint &x, const DualPoint &y, const DataPoint &z, double r) {
    const auto F = F_vector(spec, x, z, r);
    const auto G = G_vector(spec, x.model, z);
    double out = 0.0;
    for (std::size_t g = 0; g < kNumGroups; ++g) {
        out += y.y[g] * F[g];
    }
    for (std::size_t i = 0; i < kNumPairs; ++i) {
        out += y.alpha[i] * G[i];
    }
    return out;
}

DualGradient grad_y_phi(const ProblemSpec &spec, const PrimalPoint &x, const DataPoint &z, double r) {
    return DualGradient{ F_vector(spec, x, z, r), G_vector(spec, x.model, z) };
}

BatchGradient::BatchGradient(const ProblemSpec &spec) :
    spec_{ &spec },
    gx_(static_cast<Eigen::Index>(spec.shape.parameter_count() + kNumAb)),
    grad_h_(static_cast<Eigen::Index>(spec.shape.parameter_count())),
    hidden_(static_cast<Eigen::Index>(spec.shape.kind == ModelKind::Mlp2 ? spec.shape.hidden : 0)) {
    for (int cell = 0; cell < 4; ++cell) {
        DataPoint z;
        z.label = (cell & 2) != 0 ? 1 : -1;
        z.sensitive = (cell & 1) != 0 ? 1 : -1;
        for (std::size_t i = 0; i < kNumPairs; ++i) {
            const PairWeights w = pair_weights(spec, i, z);
            cell_weights_[static_cast<std::size_t>(cell)][i] = { w.wg, w.wgp };
        }
    }
}

void BatchGradient::accumulate(const PrimalPoint &x, const DualPoint &y, const DataPoint &z, double weight) {
    const ProblemSpec &spec = *spec_;
    const double c1 = spec.c1;
    const double c2 = spec.c2;
    const double h = score_with_gradient(x.model, z.features, grad_h_, hidden_);
    const Eigen::Index nw = grad_h_.size();
    const auto &cell = cell_weights_[(z.label > 0 ? 2U : 0U) + (z.sensitive > 0 ? 1U : 0U)];
    double dh = 0.0;
    for (std::size_t i = 0; i < kNumPairs; ++i) {
        const std::size_t g = kPairGroup[i];
        const PairWeights w{ cell[i][0], cell[i][1] };
        const double a = x.ab[2 * i];
        const double b = x.ab[2 * i + 1];
        gy_.u[g] += weight * kernel_F(spec, h, a, b, w);
        gy_.v[i] += weight * kernel_G(spec, h, w);
        if (w.wg == 0.0 && w.wgp == 0.0) {
            continue;
        }
        const double ty = y.y[g];
        const double dF_dh = 2.0 * c1 * (-c2 * w.wg + c2 * w.wgp + (h - a) * w.wg + (h - b) * w.wgp);
        const double dG_dh = 2.0 * c1 * (w.wg - w.wgp);
        dh += ty * dF_dh + y.alpha[i] * dG_dh;
        gx_(nw + static_cast<Eigen::Index>(2 * i)) += weight * ty * (-2.0 * c1 * (h - a) * w.wg);
        gx_(nw + static_cast<Eigen::Index>(2 * i + 1)) += weight * ty * (-2.0 * c1 * (h - b) * w.wgp);
    }
    gx_.head(nw) += (weight * dh) * grad_h_;
}

void BatchGradient::evaluate(const PrimalPoint &x, const DualPoint &y, const Dataset &d, std::span<const std::size_t> idx, double r) {
    gx_.setZero();
    gy_ = DualGradient{};
    if (idx.empty()) {
        const double weight = 1.0 / static_cast<double>(d.size());
        for (const DataPoint &z : d.points()) {
            accumulate(x, y, z, weight);
        }
    } else {
        const double weight = 1.0 / static_cast<double>(idx.size());
        for (const std::size_t k : idx) {
            accumulate(x, y, d[k], weight);
        }
    }
    gy_.u[0] -= r;
    gy_.u[1] -= 1.0 + spec_->kappa;
    gy_.u[2] -= 1.0 + spec_->kappa;
}

Eigen::VectorXd grad_x_phi(const ProblemSpec &spec, const PrimalPoint &x, const DualPoint &y, const DataPoint &z, double r) {
    x.model.validate();
    if (static_cast<std::size_t>(z.features.size()) != x.model.shape.input_dim) {
        throw InvalidArgument("feature dimension does not match the model");
    }
    ProblemSpec local = spec;
    local.shape = x.model.shape;
    BatchGradient bg{ local };
    const std::size_t one = 0;
    const Dataset single{ std::vector<DataPoint>{ z } };
    bg.evaluate(x, y, single, std::span<const std::size_t>{ &one, 1 }, r);
    return bg.gx();
}

ObjectiveValues full_objective(const ProblemSpec &spec, const Dataset &d, const PrimalPoint &x) {
    const Eigen::VectorXd h = score_all(x.model, d);
    std::array<double, kNumPairs> meanF{};
    std::array<double, kNumPairs> meanG{};
    for (std::size_t k = 0; k < d.size(); ++k) {
        const double hk = h(static_cast<Eigen::Index>(k));
        for (std::size_t i = 0; i < kNumPairs; ++i) {
            const PairWeights w = pair_weights(spec, i, d[k]);
            meanF[i] += kernel_F(spec, hk, x.ab[2 * i], x.ab[2 * i + 1], w);
            meanG[i] += kernel_G(spec, hk, w);
        }
    }
    const double n = static_cast<double>(d.size());
    const double I = spec.interval_radius;
    ObjectiveValues out;
    for (std::size_t i = 0; i < kNumPairs; ++i) {
        meanF[i] /= n;
        meanG[i] /= n;
        const double alpha = std::clamp(meanG[i] / 2.0, -I, I);
        out.alpha_star[i] = alpha;
        out.contributions[i] = meanF[i] + alpha * meanG[i] - alpha * alpha;
    }
    out.f0 = out.contributions[0];
    out.f1 = out.contributions[1] + out.contributions[2];
    out.f2 = out.contributions[3] + out.contributions[4];
    out.f1_ok = out.f1 <= 1.0 + spec.kappa;
    out.f2_ok = out.f2 <= 1.0 + spec.kappa;
    return out;
}

ObjectiveValues regularized_objective(const ProblemSpec &spec, const Dataset &d, const PrimalPoint &x, double rho_hat, const PrimalPoint &center) {
    ObjectiveValues out = full_objective(spec, d, x);
    const double dx = 0.5 * rho_hat * (flatten(x) - flatten(center)).squaredNorm();
    out.f0 += dx;
    out.f1 += dx;
    out.f2 += dx;
    out.f1_ok = out.f1 <= 1.0 + spec.kappa;
    out.f2_ok = out.f2 <= 1.0 + spec.kappa;
    return out;
}

PrimalPoint with_optimal_ab(const ProblemSpec &spec, const Dataset &d, const ModelParams &m) {
    const Eigen::VectorXd h = score_all(m, d);
    PrimalPoint x{ m, {} };
    const double I = spec.interval_radius;
    for (std::size_t i = 0; i < kNumPairs; ++i) {
        double sa = 0.0;
        double sb = 0.0;
        std::size_t na = 0;
        std::size_t nb = 0;
        for (std::size_t k = 0; k < d.size(); ++k) {
            if (spec.pairs[i].g.matches(d[k])) {
                sa += h(static_cast<Eigen::Index>(k));
                ++na;
            }
            if (spec.pairs[i].gp.matches(d[k])) {
                sb += h(static_cast<Eigen::Index>(k));
                ++nb;
            }
        }
        x.ab[2 * i] = na > 0 ? std::clamp(sa / static_cast<double>(na), -I, I) : 0.0;
        x.ab[2 * i + 1] = nb > 0 ? std::clamp(sb / static_cast<double>(nb), -I, I) : 0.0;
    }
    return x;
}

ObjectiveValues constraint_audit(const ProblemSpec &spec, const Dataset &d, const ModelParams &m) {
    return full_objective(spec, d, with_optimal_ab(spec, d, m));
}

}  // namespace fairauc
