#include "fairauc/error.hpp"
#include "fairauc/reformulation.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace fairauc;

namespace {

std::vector<bool> flags(const Dataset &d, const GroupSelector &g) {
    std::vector<bool> out;
    for (const auto &z : d.points()) out.push_back(g.matches(z));
    return out;
}

std::vector<double> scores(const ModelParams &m, const Dataset &d) {
    const Eigen::VectorXd s = score_all(m, d);
    return { s.data(), s.data() + s.size() };
}

ProblemSpec spec_for(const Dataset &d, FairnessKind kind, ModelKind model, double c1, double c2, double kappa, double radius = 5.0) {
    ProblemOptions o;
    o.kind = kind;
    o.model = model;
    o.c1 = c1;
    o.c2 = c2;
    o.kappa = kappa;
    o.hidden = 4;
    o.domain.radius = radius;
    return make_problem_spec(d, o);
}

// E[c1 (h - a)^2 | G] style average over a selector
double cond_mean_sq(const std::vector<double> &h, const std::vector<bool> &in, double a) {
    double s = 0.0, c = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k)
        if (in[k]) {
            s += (h[k] - a) * (h[k] - a);
            c += 1.0;
        }
    return s / c;
}

}  // namespace

TEST_CASE("spec construction") {
    std::mt19937_64 rng{ 31 };
    const Dataset d = oracle::random_dataset(40, 3, rng);
    const ProblemSpec s = spec_for(d, FairnessKind::InterGroupPairwise, ModelKind::Linear, 0.5, 1.0, 0.1);
    CHECK(s.interval_radius == doctest::Approx(2.0 * s.score_bound + 1.0));
    CHECK(s.score_bound == doctest::Approx(5.0 * max_feature_norm(d)));
    for (std::size_t i = 0; i < kNumPairs; ++i) {
        CHECK(s.probs[i][0] == group_probability(d, s.pairs[i].g));
        CHECK(s.probs[i][1] == group_probability(d, s.pairs[i].gp));
    }
    const GroupQuad q = group_pairs_for(FairnessKind::InterGroupPairwise);
    CHECK(s.pairs[0].g == kPositives);
    CHECK(s.pairs[0].gp == kNegatives);
    CHECK(s.pairs[1].g == q.g1p);
    CHECK(s.pairs[1].gp == q.g1);
    CHECK(s.pairs[2].g == q.g2);
    CHECK(s.pairs[2].gp == q.g2p);
    CHECK(s.pairs[3].g == q.g2p);
    CHECK(s.pairs[3].gp == q.g2);
    CHECK(s.pairs[4].g == q.g1);
    CHECK(s.pairs[4].gp == q.g1p);

    ProblemOptions o;
    o.interval_radius = s.score_bound;  // below 2 * score_bound
    o.domain.radius = 5.0;
    CHECK_THROWS_AS((void)make_problem_spec(d, o), InvalidArgument);
}

TEST_CASE("empty group is rejected with the selector named") {
    std::vector<DataPoint> pts(4);
    for (std::size_t i = 0; i < 4; ++i) {
        pts[i].features = Eigen::VectorXd::Constant(1, double(i));
        pts[i].label = i % 2 ? 1 : -1;
        pts[i].sensitive = 1;
    }
    try {
        (void)make_problem_spec(Dataset(pts), {});
        FAIL("expected InvalidArgument");
    } catch (const InvalidArgument &e) {
        CHECK(std::string(e.what()).find("gamma=-1") != std::string::npos);
    }
}

TEST_CASE("sample_F at the constant scorer and outside both groups") {
    std::mt19937_64 rng{ 32 };
    const Dataset d = oracle::random_dataset(30, 2, rng);
    const ProblemSpec s = spec_for(d, FairnessKind::IntraGroupPairwise, ModelKind::Linear, 1.0, 1.0, 0.0);
    const PrimalPoint x0 = zero_point(s);
    for (const auto &z : d.points())
        for (std::size_t i = 0; i < kNumPairs; ++i) CHECK(sample_F(s, x0, z, i) == 1.0);

    const ProblemSpec s2 = spec_for(d, FairnessKind::IntraGroupPairwise, ModelKind::Linear, 0.7, 1.3, 0.0);
    const PrimalPoint x = oracle::random_primal(s2, 1.0, 1.0, rng);
    for (const auto &z : d.points())
        for (std::size_t i = 0; i < kNumPairs; ++i)
            if (!s2.pairs[i].g.matches(z) && !s2.pairs[i].gp.matches(z)) CHECK(sample_F(s2, x, z, i) == 0.7 * 1.3 * 1.3);
}

TEST_CASE("dataset means of F and G equal the grouped-average forms") {
    std::mt19937_64 rng{ 33 };
    for (FairnessKind kind : kAllFairnessKinds) {
        for (int rep = 0; rep < 5; ++rep) {
            const Dataset d = oracle::random_dataset(25, 3, rng);
            const double c1 = 0.3 + 0.2 * rep, c2 = 0.5 + 0.3 * rep;
            const ProblemSpec s = spec_for(d, kind, ModelKind::Linear, c1, c2, 0.1);
            const PrimalPoint x = oracle::random_primal(s, 1.0, 1.0, rng);
            const auto h = scores(x.model, d);
            for (std::size_t i = 0; i < kNumPairs; ++i) {
                double fs = 0.0, gs = 0.0;
                for (const auto &z : d.points()) {
                    fs += sample_F(s, x, z, i);
                    gs += sample_G(s, x.model, z, i);
                }
                fs /= double(d.size());
                gs /= double(d.size());
                const auto in_g = flags(d, s.pairs[i].g), in_gp = flags(d, s.pairs[i].gp);
                const double mg = oracle::conditional_mean(h, in_g), mgp = oracle::conditional_mean(h, in_gp);
                const double a = x.ab[2 * i], b = x.ab[2 * i + 1];
                const double f_ref = c1 * c2 * c2 - 2 * c1 * c2 * mg + 2 * c1 * c2 * mgp + c1 * cond_mean_sq(h, in_g, a) + c1 * cond_mean_sq(h, in_gp, b);
                CHECK(std::abs(fs - f_ref) < 1e-12);
                CHECK(std::abs(gs - 2 * c1 * (mg - mgp)) < 1e-12);
            }
        }
    }
}

TEST_CASE("G averages to zero for a constant scorer with equal group sizes") {
    // four points, one per cell, so every selector of a given shape has the same probability
    std::vector<DataPoint> pts(4);
    for (std::size_t i = 0; i < 4; ++i) {
        pts[i].features = Eigen::VectorXd::Ones(1);
        pts[i].label = (i & 1) ? 1 : -1;
        pts[i].sensitive = (i & 2) ? 1 : -1;
    }
    const Dataset d(pts);
    const ProblemSpec s = spec_for(d, FairnessKind::IntraGroupPairwise, ModelKind::Linear, 0.5, 1.0, 0.0);
    ModelParams m = ModelParams::zeros(s.shape);
    m.weights(0) = 0.8;  // h = 0.8 everywhere
    std::array<double, kNumPairs> avg{};
    for (const auto &z : d.points()) {
        const auto g = G_vector(s, m, z);
        for (std::size_t i = 0; i < kNumPairs; ++i) avg[i] += g[i] / 4.0;
        // a single point sits in at most one side of each pair here, so each entry is 0 or +-2 c1 h / Pr
        int nonzero = 0;
        for (std::size_t i = 0; i < kNumPairs; ++i) {
            if (g[i] == 0.0) continue;
            ++nonzero;
            const double sign = s.pairs[i].g.matches(z) ? 1.0 : -1.0;
            const double pr = s.pairs[i].g.matches(z) ? s.probs[i][0] : s.probs[i][1];
            CHECK(g[i] == doctest::Approx(sign * 2 * 0.5 * 0.8 / pr));
        }
        CHECK(nonzero == 3);  // the D+/D- pair plus two fairness pairs
    }
    for (double v : avg) CHECK(std::abs(v) < 1e-15);
}

TEST_CASE("F_vector: constant scorer example, r shift, composition") {
    std::mt19937_64 rng{ 34 };
    const Dataset d = oracle::random_dataset(20, 2, rng);
    const ProblemSpec s = spec_for(d, FairnessKind::GroupAuc, ModelKind::Linear, 0.5, 1.0, 0.2);
    const PrimalPoint x0 = zero_point(s);
    for (const auto &z : d.points()) {
        const auto f = F_vector(s, x0, z, 0.0);
        CHECK(f[0] == 0.5);
        CHECK(f[1] == doctest::Approx(-0.2).epsilon(1e-15));
        CHECK(f[2] == doctest::Approx(-0.2).epsilon(1e-15));
    }
    const PrimalPoint x = oracle::random_primal(s, 1.0, 1.0, rng);
    for (const auto &z : d.points()) {
        const auto f = F_vector(s, x, z, 0.3);
        CHECK(F_vector(s, x, z, 0.3 + 0.125)[0] == doctest::Approx(f[0] - 0.125).epsilon(1e-15));
        CHECK(f[0] == sample_F(s, x, z, 0) - 0.3);
        CHECK(f[1] == sample_F(s, x, z, 1) + sample_F(s, x, z, 2) - 1.0 - 0.2);
        CHECK(f[2] == sample_F(s, x, z, 3) + sample_F(s, x, z, 4) - 1.0 - 0.2);
        const auto g = G_vector(s, x.model, z);
        for (std::size_t i = 0; i < kNumPairs; ++i) CHECK(g[i] == sample_G(s, x.model, z, i));
    }
}

TEST_CASE("G_vector follows the pair table") {
    std::mt19937_64 rng{ 35 };
    const Dataset d = oracle::random_dataset(20, 2, rng);
    const ProblemSpec s = spec_for(d, FairnessKind::BpsnBnsp, ModelKind::Linear, 0.5, 1.0, 0.0);
    ProblemSpec t = s;
    const std::array<std::size_t, kNumPairs> perm{ 3, 0, 4, 1, 2 };
    for (std::size_t i = 0; i < kNumPairs; ++i) {
        t.pairs[i] = s.pairs[perm[i]];
        t.probs[i] = s.probs[perm[i]];
    }
    const PrimalPoint x = oracle::random_primal(s, 1.0, 1.0, rng);
    for (const auto &z : d.points()) {
        const auto gs = G_vector(s, x.model, z), gt = G_vector(t, x.model, z);
        for (std::size_t i = 0; i < kNumPairs; ++i) CHECK(gt[i] == gs[perm[i]]);
    }
}

TEST_CASE("phi: vertex case, dot-product composition, linearity in y") {
    std::mt19937_64 rng{ 36 };
    const Dataset d = oracle::random_dataset(20, 3, rng);
    const ProblemSpec s = spec_for(d, FairnessKind::AegPositive, ModelKind::Mlp2, 0.5, 1.0, 0.1);
    const double I = s.interval_radius;
    for (int rep = 0; rep < 30; ++rep) {
        const PrimalPoint x = oracle::random_primal(s, 1.0, 1.0, rng);
        const DataPoint &z = d[static_cast<std::size_t>(rep) % d.size()];
        DualPoint e0;
        e0.y = { 1.0, 0.0, 0.0 };
        CHECK(phi(s, x, e0, z, 0.4) == sample_F(s, x, z, 0) - 0.4);

        const DualPoint y = oracle::random_dual(I, rng), yp = oracle::random_dual(I, rng);
        const auto f = F_vector(s, x, z, 0.4);
        const auto g = G_vector(s, x.model, z);
        double ref = 0.0;
        for (std::size_t k = 0; k < kNumGroups; ++k) ref += y.y[k] * f[k];
        for (std::size_t i = 0; i < kNumPairs; ++i) ref += y.alpha[i] * g[i];
        CHECK(std::abs(phi(s, x, y, z, 0.4) - ref) <= 1e-14 * std::max(1.0, std::abs(ref)));

        const double lam = 0.3;
        DualPoint mix;
        for (std::size_t k = 0; k < kNumGroups; ++k) mix.y[k] = lam * y.y[k] + (1 - lam) * yp.y[k];
        for (std::size_t i = 0; i < kNumPairs; ++i) mix.alpha[i] = lam * y.alpha[i] + (1 - lam) * yp.alpha[i];
        CHECK(in_dual_domain(mix, I));
        const double lhs = phi(s, x, mix, z, 0.4);
        const double rhs = lam * phi(s, x, y, z, 0.4) + (1 - lam) * phi(s, x, yp, z, 0.4);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
    }
}

TEST_CASE("grad_x_phi matches central differences, both kinds") {
    std::mt19937_64 rng{ 37 };
    for (ModelKind kind : { ModelKind::Linear, ModelKind::Mlp2 }) {
        for (int rep = 0; rep < 50; ++rep) {
            const Dataset d = oracle::random_dataset(12, 3, rng);
            const FairnessKind fk = kAllFairnessKinds[static_cast<std::size_t>(rep) % kAllFairnessKinds.size()];
            const ProblemSpec s = spec_for(d, fk, kind, 0.5, 1.0, 0.1);
            const PrimalPoint x = oracle::random_primal(s, 1.0, 1.0, rng);
            const DualPoint y = oracle::random_dual(s.interval_radius, rng);
            const DataPoint &z = d[static_cast<std::size_t>(rep) % d.size()];
            auto f = [&](const Eigen::VectorXd &v) { return phi(s, unflatten(s.shape, v), y, z, 0.2); };
            const Eigen::VectorXd fd = oracle::central_difference(f, flatten(x));
            CHECK(oracle::relative_error(grad_x_phi(s, x, y, z, 0.2), fd) < 1e-5);
        }
    }
}

TEST_CASE("grad_x_phi: vertex case and a/b blocks at zero Mlp2 weights") {
    std::mt19937_64 rng{ 38 };
    const Dataset d = oracle::random_dataset(16, 2, rng);
    const ProblemSpec sl = spec_for(d, FairnessKind::GroupAuc, ModelKind::Linear, 0.5, 1.0, 0.0);
    const PrimalPoint xl = oracle::random_primal(sl, 1.0, 1.0, rng);
    DualPoint e0;
    e0.y = { 1.0, 0.0, 0.0 };
    for (const auto &z : d.points()) {
        auto f = [&](const Eigen::VectorXd &v) { return sample_F(sl, unflatten(sl.shape, v), z, 0); };
        CHECK(oracle::relative_error(grad_x_phi(sl, xl, e0, z, 0.0), oracle::central_difference(f, flatten(xl))) < 1e-6);
    }

    const ProblemSpec sm = spec_for(d, FairnessKind::GroupAuc, ModelKind::Mlp2, 0.5, 1.0, 0.0);
    PrimalPoint xm = zero_point(sm);
    for (double &v : xm.ab) v = std::uniform_real_distribution<double>(-1, 1)(rng);
    const DualPoint y = oracle::random_dual(sm.interval_radius, rng);
    const std::size_t P = sm.shape.parameter_count();
    for (const auto &z : d.points()) {
        const Eigen::VectorXd g = grad_x_phi(sm, xm, y, z, 0.0);
        for (std::size_t i = 0; i < kNumPairs; ++i) {
            const double yg = y.y[oracle::kGroupOfPair(i)];
            const double in_g = sm.pairs[i].g.matches(z) ? 1.0 / sm.probs[i][0] : 0.0;
            const double in_gp = sm.pairs[i].gp.matches(z) ? 1.0 / sm.probs[i][1] : 0.0;
            // h = 0, so d/da of c1 (h - a)^2 is 2 c1 a
            CHECK(g(static_cast<Eigen::Index>(P + 2 * i)) == doctest::Approx(yg * 0.5 * 2.0 * xm.ab[2 * i] * in_g).epsilon(1e-13));
            CHECK(g(static_cast<Eigen::Index>(P + 2 * i + 1)) == doctest::Approx(yg * 0.5 * 2.0 * xm.ab[2 * i + 1] * in_gp).epsilon(1e-13));
        }
    }
}

TEST_CASE("grad_y_phi equals (F, G), ignores y, and matches differences") {
    std::mt19937_64 rng{ 39 };
    const Dataset d = oracle::random_dataset(20, 2, rng);
    const ProblemSpec s = spec_for(d, FairnessKind::AegNegative, ModelKind::Linear, 0.5, 1.0, 0.1);
    for (int rep = 0; rep < 20; ++rep) {
        const PrimalPoint x = oracle::random_primal(s, 1.0, 1.0, rng);
        const DataPoint &z = d[static_cast<std::size_t>(rep)];
        const DualGradient g = grad_y_phi(s, x, z, 0.1);
        const auto f = F_vector(s, x, z, 0.1);
        const auto gv = G_vector(s, x.model, z);
        CHECK(g.u == f);
        CHECK(g.v == gv);
        const DualPoint y = oracle::random_dual(s.interval_radius, rng, 0.2);
        Eigen::VectorXd flat(8);
        for (std::size_t k = 0; k < 3; ++k) flat(static_cast<Eigen::Index>(k)) = y.y[k];
        for (std::size_t i = 0; i < 5; ++i) flat(static_cast<Eigen::Index>(3 + i)) = y.alpha[i];
        auto ph = [&](const Eigen::VectorXd &v) {
            DualPoint q;
            for (std::size_t k = 0; k < 3; ++k) q.y[k] = v(static_cast<Eigen::Index>(k));
            for (std::size_t i = 0; i < 5; ++i) q.alpha[i] = v(static_cast<Eigen::Index>(3 + i));
            return phi(s, x, q, z, 0.1);
        };
        Eigen::VectorXd analytic(8);
        for (std::size_t k = 0; k < 3; ++k) analytic(static_cast<Eigen::Index>(k)) = g.u[k];
        for (std::size_t i = 0; i < 5; ++i) analytic(static_cast<Eigen::Index>(3 + i)) = g.v[i];
        CHECK(oracle::relative_error(analytic, oracle::central_difference(ph, flat, 1e-6)) < 1e-6);
    }
}

TEST_CASE("BatchGradient averages the per-sample gradients") {
    std::mt19937_64 rng{ 40 };
    const Dataset d = oracle::random_dataset(30, 3, rng);
    for (ModelKind kind : { ModelKind::Linear, ModelKind::Mlp2 }) {
        const ProblemSpec s = spec_for(d, FairnessKind::IntraGroupPairwise, kind, 0.5, 1.0, 0.1);
        const PrimalPoint x = oracle::random_primal(s, 1.0, 1.0, rng);
        const DualPoint y = oracle::random_dual(s.interval_radius, rng);
        BatchGradient bg{ s };
        const std::vector<std::size_t> idx{ 3, 7, 7, 29 };
        bg.evaluate(x, y, d, idx, 0.25);
        Eigen::VectorXd gx = Eigen::VectorXd::Zero(flatten(x).size());
        DualGradient gy;
        for (std::size_t k : idx) {
            gx += grad_x_phi(s, x, y, d[k], 0.25) / 4.0;
            const DualGradient g = grad_y_phi(s, x, d[k], 0.25);
            for (std::size_t j = 0; j < 3; ++j) gy.u[j] += g.u[j] / 4.0;
            for (std::size_t i = 0; i < 5; ++i) gy.v[i] += g.v[i] / 4.0;
        }
        CHECK(oracle::relative_error(bg.gx(), gx) < 1e-13);
        for (std::size_t j = 0; j < 3; ++j) CHECK(bg.gy().u[j] == doctest::Approx(gy.u[j]).epsilon(1e-13));
        for (std::size_t i = 0; i < 5; ++i) CHECK(bg.gy().v[i] == doctest::Approx(gy.v[i]).epsilon(1e-13));

        bg.evaluate(x, y, d, {}, 0.25);
        Eigen::VectorXd full = Eigen::VectorXd::Zero(gx.size());
        for (const auto &z : d.points()) full += grad_x_phi(s, x, y, z, 0.25) / double(d.size());
        CHECK(oracle::relative_error(bg.gx(), full) < 1e-13);
    }
}

TEST_CASE("full_objective: constant scorer is strictly feasible") {
    std::mt19937_64 rng{ 41 };
    const Dataset d = oracle::random_dataset(40, 2, rng);
    for (FairnessKind kind : kAllFairnessKinds) {
        const ProblemSpec s = spec_for(d, kind, ModelKind::Linear, 0.5, 1.0, 0.05);
        PrimalPoint x = zero_point(s);
        for (double &v : x.ab) v = 0.0;
        const ObjectiveValues o = full_objective(s, d, x);
        CHECK(o.f1 == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(o.f2 == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(o.f0 == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(o.f1_ok);
        CHECK(o.f2_ok);
        CHECK(o.max_violation(0.05) < 0.0);
    }
}

TEST_CASE("full_objective equals the pairwise double sum at c1 = 1") {
    std::mt19937_64 rng{ 42 };
    std::uniform_real_distribution<double> uc2(0.2, 2.0);
    for (int rep = 0; rep < 30; ++rep) {
        const Dataset d = oracle::random_dataset(20, 3, rng);
        const FairnessKind fk = kAllFairnessKinds[static_cast<std::size_t>(rep) % kAllFairnessKinds.size()];
        const double c2 = uc2(rng);
        const ProblemSpec s = spec_for(d, fk, ModelKind::Linear, 1.0, c2, 0.0);
        ModelParams m = ModelParams::zeros(s.shape);
        m.weights = oracle::random_vector(3, 1.0, rng);
        const ObjectiveValues o = full_objective(s, d, with_optimal_ab(s, d, m));
        const auto h = scores(m, d);
        for (std::size_t i = 0; i < kNumPairs; ++i) {
            const double ref = oracle::pairwise_loss(h, flags(d, s.pairs[i].g), flags(d, s.pairs[i].gp), 1.0, c2);
            CHECK(std::abs(o.contributions[i] - ref) < 1e-10);
        }
        CHECK(std::abs(o.f1 - o.contributions[1] - o.contributions[2]) < 1e-15);
        CHECK(std::abs(o.f2 - o.contributions[3] - o.contributions[4]) < 1e-15);
        CHECK(o.f0 == o.contributions[0]);
    }
}

TEST_CASE("at c1 != 1 the min-max value differs from the double sum by (c1^2 - c1) delta^2") {
    // the kernels carry c1 inside G as well as in the -alpha^2 penalty, so the inner maximum is
    // c1^2 delta^2 where the pairwise loss has c1 delta^2
    std::mt19937_64 rng{ 43 };
    for (double c1 : { 0.25, 0.5, 2.0 }) {
        const Dataset d = oracle::random_dataset(20, 3, rng);
        const ProblemSpec s = spec_for(d, FairnessKind::InterGroupPairwise, ModelKind::Linear, c1, 1.0, 0.0);
        ModelParams m = ModelParams::zeros(s.shape);
        m.weights = oracle::random_vector(3, 1.0, rng);
        const ObjectiveValues o = full_objective(s, d, with_optimal_ab(s, d, m));
        const auto h = scores(m, d);
        for (std::size_t i = 0; i < kNumPairs; ++i) {
            const auto in_g = flags(d, s.pairs[i].g), in_gp = flags(d, s.pairs[i].gp);
            const double delta = oracle::conditional_mean(h, in_g) - oracle::conditional_mean(h, in_gp);
            const double ref = oracle::pairwise_loss(h, in_g, in_gp, c1, 1.0);
            CHECK(std::abs(o.contributions[i] - (ref + (c1 * c1 - c1) * delta * delta)) < 1e-10);
        }
    }
}

TEST_CASE("optimal auxiliaries minimize the objective over a and b") {
    std::mt19937_64 rng{ 44 };
    const Dataset d = oracle::random_dataset(30, 3, rng);
    const ProblemSpec s = spec_for(d, FairnessKind::GroupAuc, ModelKind::Linear, 0.5, 1.0, 0.0);
    ModelParams m = ModelParams::zeros(s.shape);
    m.weights = oracle::random_vector(3, 1.0, rng);
    const PrimalPoint best = with_optimal_ab(s, d, m);
    const ObjectiveValues ob = full_objective(s, d, best);
    const ObjectiveValues audit = constraint_audit(s, d, m);
    CHECK(audit.f0 == ob.f0);
    CHECK(audit.f1 == ob.f1);
    for (int rep = 0; rep < 100; ++rep) {
        PrimalPoint x = best;
        for (double &v : x.ab) v += std::uniform_real_distribution<double>(-0.3, 0.3)(rng);
        const ObjectiveValues o = full_objective(s, d, x);
        CHECK(o.f0 >= ob.f0 - 1e-14);
        CHECK(o.f1 >= ob.f1 - 1e-14);
        CHECK(o.f2 >= ob.f2 - 1e-14);
    }
}

TEST_CASE("linear full_objective is midpoint convex") {
    std::mt19937_64 rng{ 45 };
    const Dataset d = oracle::random_dataset(25, 3, rng);
    const ProblemSpec s = spec_for(d, FairnessKind::BpsnBnsp, ModelKind::Linear, 0.5, 1.0, 0.1);
    int violations = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        const PrimalPoint x = oracle::random_primal(s, 2.0, 2.0, rng), y = oracle::random_primal(s, 2.0, 2.0, rng);
        const PrimalPoint mid = unflatten(s.shape, 0.5 * (flatten(x) + flatten(y)));
        const ObjectiveValues a = full_objective(s, d, x), b = full_objective(s, d, y), m = full_objective(s, d, mid);
        const double tol = 1e-12 * (1.0 + std::abs(a.f0) + std::abs(b.f0) + std::abs(a.f1) + std::abs(b.f1) + std::abs(a.f2) + std::abs(b.f2));
        if (m.f0 > 0.5 * (a.f0 + b.f0) + tol) ++violations;
        if (m.f1 > 0.5 * (a.f1 + b.f1) + tol) ++violations;
        if (m.f2 > 0.5 * (a.f2 + b.f2) + tol) ++violations;
    }
    CHECK(violations == 0);
}

TEST_CASE("lower surrogate objective goes with higher AUC on a separable fixture") {
    // 1-d separable data: positives at +1..+2, negatives at -2..-1, half of each protected
    std::vector<DataPoint> pts;
    for (int i = 0; i < 20; ++i) {
        DataPoint p;
        const bool pos = i < 10;
        p.features = Eigen::VectorXd::Constant(1, (pos ? 1.0 : -1.0) * (1.0 + (i % 10) / 10.0));
        p.label = pos ? 1 : -1;
        p.sensitive = i % 2 ? 1 : -1;
        pts.push_back(p);
    }
    const Dataset d(pts);
    const ProblemSpec s = spec_for(d, FairnessKind::GroupAuc, ModelKind::Linear, 0.5, 1.0, 0.0);
    double prev_f0 = 1e300, prev_auc = -1.0;
    for (double w : { -1.0, -0.5, 0.0, 0.25, 0.5 }) {
        ModelParams m = ModelParams::zeros(s.shape);
        m.weights(0) = w;
        const double f0 = constraint_audit(s, d, m).f0;
        const double auc = fairness_gap(d, m, FairnessKind::GroupAuc).auc;
        CHECK(f0 < prev_f0);
        CHECK(auc >= prev_auc);
        prev_f0 = f0;
        prev_auc = auc;
    }
    CHECK(prev_auc == 1.0);
}

TEST_CASE("regularized objective adds the proximal term to all three values") {
    std::mt19937_64 rng{ 46 };
    const Dataset d = oracle::random_dataset(20, 2, rng);
    const ProblemSpec s = spec_for(d, FairnessKind::GroupAuc, ModelKind::Mlp2, 0.5, 1.0, 0.1);
    const PrimalPoint x = oracle::random_primal(s, 1.0, 1.0, rng), c = oracle::random_primal(s, 1.0, 1.0, rng);
    const ObjectiveValues a = full_objective(s, d, x), r = regularized_objective(s, d, x, 0.3, c);
    const double extra = 0.15 * (flatten(x) - flatten(c)).squaredNorm();
    CHECK(r.f0 == doctest::Approx(a.f0 + extra).epsilon(1e-14));
    CHECK(r.f1 == doctest::Approx(a.f1 + extra).epsilon(1e-14));
    CHECK(r.f2 == doctest::Approx(a.f2 + extra).epsilon(1e-14));
}

TEST_CASE("flatten round trip and domain membership") {
    std::mt19937_64 rng{ 47 };
    const Dataset d = oracle::random_dataset(20, 2, rng);
    const ProblemSpec s = spec_for(d, FairnessKind::GroupAuc, ModelKind::Mlp2, 0.5, 1.0, 0.1);
    const PrimalPoint x = oracle::random_primal(s, 0.1, 1.0, rng);
    CHECK(unflatten(s.shape, flatten(x)) == x);
    CHECK(flatten(x).size() == static_cast<Eigen::Index>(s.shape.parameter_count() + kNumAb));
    CHECK(in_primal_domain(s, x));
    PrimalPoint bad = x;
    bad.ab[3] = s.interval_radius * 1.01;
    CHECK_FALSE(in_primal_domain(s, bad));

    const DualPoint y = oracle::random_dual(s.interval_radius, rng);
    CHECK(in_dual_domain(y, s.interval_radius));
    DualPoint off = y;
    off.alpha[4] = off.y[2] * s.interval_radius * 1.001 + 1e-9;
    CHECK_FALSE(in_dual_domain(off, s.interval_radius));
    DualPoint sum = y;
    sum.y[0] += 1e-9;
    CHECK_FALSE(in_dual_domain(sum, s.interval_radius));
}
