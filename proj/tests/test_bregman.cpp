#include "fairauc/bregman.hpp"
#include "fairauc/error.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace fairauc;

namespace {

struct Instance {
    oracle::ProxInstance p;
    DualPoint yp;
};

Instance random_instance(std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> u11(-1, 1), u22(-2, 2), utau(0.1, 5.0), uI(0.5, 3.0), u01(0, 1);
    Instance in;
    in.p.tau = utau(rng);
    in.p.I = uI(rng);
    for (double &v : in.p.u) v = u11(rng);
    for (double &v : in.p.v) v = u22(rng);
    // simplex point with every component >= 0.05
    double sum = 0.0;
    for (double &v : in.p.yp) {
        v = u01(rng);
        sum += v;
    }
    for (double &v : in.p.yp) v = 0.05 + 0.85 * v / sum;
    for (std::size_t i = 0; i < 5; ++i) in.p.alpha_p[i] = in.p.I * u11(rng);
    for (std::size_t g = 0; g < 3; ++g) in.yp.y[g] = in.p.yp[g];
    for (std::size_t i = 0; i < 5; ++i) in.yp.alpha[i] = in.p.yp[oracle::kGroupOfPair(i)] * in.p.alpha_p[i];
    return in;
}

// prox objective in the library's (y~, alpha~) coordinates, built from omega_y pieces by hand
double prox_value(const Instance &in, const DualPoint &y) {
    std::array<double, 3> yy = y.y;
    std::array<double, 5> a{};
    for (std::size_t i = 0; i < 5; ++i) {
        const double yg = y.y[oracle::kGroupOfPair(i)];
        a[i] = yg > 0 ? y.alpha[i] / yg : 0.0;
    }
    return oracle::prox_objective(in.p, yy, a);
}

double norm12(const std::array<double, 3> &y1, const std::array<double, 5> &a1, const DualPoint &y2) {
    double l1 = 0.0, l2 = 0.0;
    for (std::size_t g = 0; g < 3; ++g) l1 += std::abs(y1[g] - y2.y[g]);
    for (std::size_t i = 0; i < 5; ++i) l2 += (a1[i] - y2.alpha[i]) * (a1[i] - y2.alpha[i]);
    return std::sqrt(l1 * l1 + l2);
}

}  // namespace

TEST_CASE("geometry constants") {
    for (double I : { 0.5, 1.0, 3.0, 34.3 }) {
        const GeometryParams g = GeometryParams::from_radius(I);
        CHECK(g.interval_radius == I);
        CHECK(std::abs(g.entropy_scale - 2 * (1 + std::sqrt(2.0) * I) * (1 + std::sqrt(2.0) * I)) < 1e-12 * g.entropy_scale);
    }
    CHECK_THROWS_AS((void)GeometryParams::from_radius(0.0), InvalidArgument);
}

TEST_CASE("d_y") {
    DualPoint y;
    CHECK(d_y(y, 1.0) == 0.0);
    y.y = { 1.0, 0.0, 0.0 };
    y.alpha = { 0.3, 0, 0, 0, 0 };
    CHECK(d_y(y, 1.0) == doctest::Approx(0.09).epsilon(1e-15));

    std::mt19937_64 rng{ 51 };
    for (int rep = 0; rep < 1000; ++rep) {
        const DualPoint z = oracle::random_dual(2.0, rng);
        double ratio = 0.0;
        for (std::size_t i = 0; i < 5; ++i) {
            const double yg = z.y[oracle::kGroupOfPair(i)];
            ratio += yg * (z.alpha[i] / yg) * (z.alpha[i] / yg);
        }
        CHECK(std::abs(d_y(z, 2.0) - ratio) <= 1e-14 * std::max(1.0, ratio));
    }
    DualPoint bad;
    bad.alpha[0] = 1.0;  // y~_0 = 1/3, I = 1: |alpha~_0| may not exceed 1/3
    CHECK_THROWS_AS((void)d_y(bad, 1.0), InvalidArgument);
}

TEST_CASE("omega_y") {
    const GeometryParams g = GeometryParams::from_radius(1.0);
    DualPoint uni;
    CHECK(std::abs(omega_y(uni, g)) < 1e-15 * g.entropy_scale);
    DualPoint v;
    v.y = { 1, 0, 0 };
    CHECK(omega_y(v, g) == doctest::Approx(2 * (1 + std::sqrt(2.0)) * (1 + std::sqrt(2.0)) * std::log(3.0)).epsilon(1e-14));
    std::mt19937_64 rng{ 52 };
    int negative = 0;
    for (int rep = 0; rep < 10000; ++rep)
        if (omega_y(oracle::random_dual(1.0, rng), g) < 0.0) ++negative;
    CHECK(negative == 0);
}

TEST_CASE("v_y: identity, vertex against uniform, rejection of boundary y'") {
    const GeometryParams g = GeometryParams::from_radius(1.0);
    std::mt19937_64 rng{ 53 };
    for (int rep = 0; rep < 100; ++rep) {
        const DualPoint y = oracle::random_dual(1.0, rng, 0.01);
        CHECK(std::abs(v_y(y, y, g)) < 1e-13);
    }
    DualPoint vert;
    vert.y = { 1, 0, 0 };
    CHECK(v_y(vert, DualPoint{}, g) == doctest::Approx(2 * (1 + std::sqrt(2.0)) * (1 + std::sqrt(2.0)) * std::log(3.0)).epsilon(1e-14));
    CHECK_THROWS_AS((void)v_y(DualPoint{}, vert, g), InvalidArgument);
}

TEST_CASE("v_y is 1-strongly convex in the (1,2) norm on 10^4 interior pairs") {
    std::mt19937_64 rng{ 54 };
    std::uniform_real_distribution<double> uI(0.1, 5.0);
    int violations = 0;
    double min_v = 1e300;
    for (int rep = 0; rep < 10000; ++rep) {
        const double I = uI(rng);
        const GeometryParams g = GeometryParams::from_radius(I);
        const DualPoint y = oracle::random_dual(I, rng, 1e-3), yp = oracle::random_dual(I, rng, 1e-3);
        const double n = norm12(y, yp);
        const double v = v_y(y, yp, g);
        if (v < 0.5 * n * n - 1e-9) ++violations;
        min_v = std::min(min_v, v);
    }
    CHECK(violations == 0);
    CHECK(min_v >= 0.0);
}

TEST_CASE("norms") {
    DualPoint a, b;
    b.y = { 0.5, 0.25, 0.25 };
    b.alpha = { 0.1, 0, 0, 0, -0.2 };
    const double l1 = 1.0 / 6 + 1.0 / 12 + 1.0 / 12;
    CHECK(norm12(a, b) == doctest::Approx(std::sqrt(l1 * l1 + 0.05)).epsilon(1e-14));
    DualGradient dg;
    dg.u = { 0.5, -2.0, 1.0 };
    dg.v = { 3, 4, 0, 0, 0 };
    CHECK(dual_norm(dg) == doctest::Approx(std::sqrt(4.0 + 25.0)).epsilon(1e-15));
}

TEST_CASE("dual_prox: symmetric fixed point and the log-2 example") {
    for (double I : { 0.5, 1.0, 4.0 }) {
        const GeometryParams g = GeometryParams::from_radius(I);
        for (double tau : { 0.01, 1.0, 100.0 }) {
            const DualPoint y = dual_prox({}, {}, DualPoint{}, tau, g);
            for (double v : y.y) CHECK(std::abs(v - 1.0 / 3.0) < 1e-15);
            for (double a : y.alpha) CHECK(a == 0.0);

            const double s = g.entropy_scale / tau;
            const DualPoint h = dual_prox({ s * std::log(2.0), 0, 0 }, {}, DualPoint{}, tau, g);
            CHECK(h.y[0] == doctest::Approx(0.5).epsilon(1e-13));
            CHECK(h.y[1] == doctest::Approx(0.25).epsilon(1e-13));
            CHECK(h.y[2] == doctest::Approx(0.25).epsilon(1e-13));
            for (double a : h.alpha) CHECK(a == 0.0);
        }
    }
}

TEST_CASE("dual_prox rejects bad input") {
    const GeometryParams g = GeometryParams::from_radius(1.0);
    DualPoint vert;
    vert.y = { 1, 0, 0 };
    CHECK_THROWS_AS((void)dual_prox({}, {}, vert, 1.0, g), InvalidArgument);
    CHECK_THROWS_AS((void)dual_prox({}, {}, DualPoint{}, 0.0, g), InvalidArgument);
}

TEST_CASE("dual_prox matches a numerical solver on 200 instances") {
    std::mt19937_64 rng{ 55 };
    double worst = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        const Instance in = random_instance(rng);
        const GeometryParams g = GeometryParams::from_radius(in.p.I);
        const DualPoint y = dual_prox(in.p.u, in.p.v, in.yp, in.p.tau, g);
        const oracle::ProxSolution num = oracle::solve_prox_numerically(in.p);
        REQUIRE(num.grad_norm < 1e-10);
        worst = std::max(worst, norm12(num.y, num.alpha_tilde, y));
        CHECK(in_dual_domain(y, in.p.I, 1e-12));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("dual_prox beats random feasible points") {
    std::mt19937_64 rng{ 56 };
    for (int rep = 0; rep < 20; ++rep) {
        const Instance in = random_instance(rng);
        const GeometryParams g = GeometryParams::from_radius(in.p.I);
        const DualPoint y = dual_prox(in.p.u, in.p.v, in.yp, in.p.tau, g);
        const double best = prox_value(in, y);
        int beaten = 0;
        for (int k = 0; k < 10000; ++k)
            if (prox_value(in, oracle::random_dual(in.p.I, rng)) < best - 1e-12) ++beaten;
        CHECK(beaten == 0);
    }
}

TEST_CASE("dual_prox stays inside Y for extreme inputs") {
    std::mt19937_64 rng{ 57 };
    std::uniform_real_distribution<double> big(-1e4, 1e4);
    for (int rep = 0; rep < 500; ++rep) {
        const double I = std::uniform_real_distribution<double>(0.1, 50.0)(rng);
        const GeometryParams g = GeometryParams::from_radius(I);
        std::array<double, 3> u{};
        std::array<double, 5> v{};
        for (double &t : u) t = big(rng);
        for (double &t : v) t = big(rng);
        const DualPoint y = dual_prox(u, v, oracle::random_dual(I, rng, 1e-3), std::uniform_real_distribution<double>(1e-3, 1e4)(rng), g);
        CHECK(in_dual_domain(y, I, 1e-12));
        for (double t : y.y) CHECK(std::isfinite(t));
    }
}

TEST_CASE("upper_bound: zero case and the single-pair example") {
    const GeometryParams g = GeometryParams::from_radius(1.0);
    CHECK(upper_bound({}, {}, g, 0.0) == 0.0);
    CHECK(upper_bound({}, { 1, 0, 0, 0, 0 }, g, 0.0) == 0.25);
    CHECK(upper_bound({}, { 1, 0, 0, 0, 0 }, g, 0.5) == 0.75);
    // v beyond the interval: the maximizer clamps at I
    CHECK(upper_bound({}, { 5, 0, 0, 0, 0 }, g, 0.0) == doctest::Approx(5.0 - 1.0));
}

TEST_CASE("upper_bound matches a grid search on 200 instances") {
    std::mt19937_64 rng{ 58 };
    std::uniform_real_distribution<double> u11(-1, 1), u22(-2, 2), uI(0.5, 3.0);
    double worst = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        std::array<double, 3> u{};
        std::array<double, 5> v{};
        for (double &t : u) t = u11(rng);
        for (double &t : v) t = u22(rng);
        const double I = uI(rng);
        const double closed = upper_bound(u, v, GeometryParams::from_radius(I), 0.0);
        const double grid = oracle::grid_upper_bound(u, v, I, 1e-3);
        CHECK(closed >= grid - 1e-12);  // a max over a subset cannot exceed it
        worst = std::max(worst, std::abs(closed - grid));
    }
    CHECK(worst < 5e-3);
}

TEST_CASE("upper_bound dominates the objective at vertices and random points") {
    std::mt19937_64 rng{ 59 };
    std::uniform_real_distribution<double> u11(-1, 1);
    for (int rep = 0; rep < 200; ++rep) {
        std::array<double, 3> u{};
        std::array<double, 5> v{};
        for (double &t : u) t = u11(rng);
        for (double &t : v) t = 3 * u11(rng);
        const double I = 0.5 + 2 * std::abs(u11(rng));
        const double U = upper_bound(u, v, GeometryParams::from_radius(I), 0.0);
        for (int k = 0; k < 50; ++k) {
            DualPoint y = oracle::random_dual(I, rng);
            if (k < 3) {
                y.y = { 0, 0, 0 };
                y.y[static_cast<std::size_t>(k)] = 1.0;
                for (std::size_t i = 0; i < 5; ++i) y.alpha[i] = y.y[oracle::kGroupOfPair(i)] * I * u11(rng);
            }
            double val = -d_y(y, I);
            for (std::size_t j = 0; j < 3; ++j) val += u[j] * y.y[j];
            for (std::size_t i = 0; i < 5; ++i) val += v[i] * y.alpha[i];
            CHECK(val <= U + 1e-12);
        }
    }
}

TEST_CASE("primal_prox: fixed point, plain gradient step, projection") {
    ProblemSpec spec;
    spec.shape = { ModelKind::Linear, 3, 0 };
    spec.domain.radius = 2.0;
    spec.interval_radius = 1.5;
    const GeometryParams g = GeometryParams::from_radius(1.5);
    std::mt19937_64 rng{ 60 };
    const PrimalPoint x = oracle::random_primal(spec, 0.5, 1.0, rng);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(flatten(x).size());
    CHECK(primal_prox(zero, x, 0.7, 0.0, x, spec.domain, g) == x);

    const Eigen::VectorXd grad = oracle::random_vector(zero.size(), 0.05, rng);
    const PrimalPoint step = primal_prox(grad, x, 1.0, 0.0, x, spec.domain, g);
    CHECK(oracle::relative_error(flatten(step), flatten(x) - grad) < 1e-15);

    const Eigen::VectorXd huge = Eigen::VectorXd::Constant(zero.size(), -100.0);
    const PrimalPoint clipped = primal_prox(huge, x, 1.0, 0.0, x, spec.domain, g);
    CHECK(clipped.model.weights.norm() == doctest::Approx(2.0).epsilon(1e-14));
    for (double v : clipped.ab) CHECK(v == 1.5);
    CHECK(primal_prox(zero, clipped, 0.3, 0.0, clipped, spec.domain, g) == clipped);
}

TEST_CASE("primal_prox matches projected gradient on the prox quadratic") {
    ProblemSpec spec;
    spec.shape = { ModelKind::Mlp2, 2, 3 };
    spec.domain.radius = 1.0;
    spec.interval_radius = 1.0;
    const GeometryParams g = GeometryParams::from_radius(1.0);
    std::mt19937_64 rng{ 61 };
    for (int rep = 0; rep < 50; ++rep) {
        const PrimalPoint xt = oracle::random_primal(spec, 0.4, 1.0, rng), ctr = oracle::random_primal(spec, 0.4, 1.0, rng);
        const Eigen::VectorXd grad = oracle::random_vector(flatten(xt).size(), 3.0, rng);
        const double eta = 0.5, rho = 0.3;
        const PrimalPoint got = primal_prox(grad, xt, eta, rho, ctr, spec.domain, g);

        // projected gradient on <grad, x> + |x - xt|^2 / (2 eta) + rho/2 |x - ctr|^2 with a half step
        const Eigen::VectorXd a = flatten(xt), c = flatten(ctr);
        const std::size_t P = spec.shape.parameter_count();
        const double L = 1.0 / eta + rho;
        Eigen::VectorXd z = Eigen::VectorXd::Zero(a.size());
        for (int it = 0; it < 400; ++it) {
            const Eigen::VectorXd gz = grad + (z - a) / eta + rho * (z - c);
            z -= 0.5 / L * gz;
            const double wn = z.head(static_cast<Eigen::Index>(P)).norm();
            if (wn > 1.0) z.head(static_cast<Eigen::Index>(P)) /= wn;
            for (Eigen::Index k = static_cast<Eigen::Index>(P); k < z.size(); ++k) z(k) = std::clamp(z(k), -1.0, 1.0);
        }
        CHECK((flatten(got) - z).norm() < 1e-8);
        CHECK(in_primal_domain(spec, got));
    }
}
