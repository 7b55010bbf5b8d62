#pragma once

#include "fairauc/dataset.hpp"
#include "fairauc/metrics.hpp"
#include "fairauc/model.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <span>

namespace fairauc {

inline constexpr std::size_t kNumPairs = 5;
inline constexpr std::size_t kNumGroups = 3;
inline constexpr std::size_t kNumAb = 2 * kNumPairs;

/// Which component of the simplex weight multiplies pair i.
inline constexpr std::array<std::size_t, kNumPairs> kPairGroup{ 0, 1, 1, 2, 2 };

struct SelectorPair {
    GroupSelector g;
    GroupSelector gp;
};

/**
 * Everything the kernels need: loss constants, fairness budget, the five (G, G') pairs in
 * canonical order [(D+,D-), (G1',G1), (G2,G2'), (G2',G2), (G1,G1')], their empirical
 * probabilities frozen from the training split, the interval radius I and the domain of w.
 */
struct ProblemSpec {
    double c1{ 0.5 };
    double c2{ 1.0 };
    double kappa{ 0.0 };
    FairnessKind kind{ FairnessKind::GroupAuc };
    std::array<SelectorPair, kNumPairs> pairs{};
    /// probs[i] = {Pr(G_i), Pr(G'_i)}
    std::array<std::array<double, 2>, kNumPairs> probs{};
    double interval_radius{ 1.0 };
    double score_bound{ 0.0 };
    ModelShape shape{};
    ParamDomain domain{};
};

struct ProblemOptions {
    FairnessKind kind{ FairnessKind::GroupAuc };
    double c1{ 0.5 };
    double c2{ 1.0 };
    double kappa{ 0.0 };
    ModelKind model{ ModelKind::Linear };
    std::size_t hidden{ kDefaultHidden };
    ParamDomain domain{};
    /// Defaults to 2 * score_bound + 1; an explicit value must be at least 2 * score_bound.
    std::optional<double> interval_radius{};
};

[[nodiscard]] std::array<SelectorPair, kNumPairs> canonical_pairs(FairnessKind kind) noexcept;

/// Builds and validates a spec from the training data. Throws InvalidArgument naming the
/// selector when a group is empty.
[[nodiscard]] ProblemSpec make_problem_spec(const Dataset &train, const ProblemOptions &opts);

/// x = (w, a0, b0, ..., a4, b4). ab[2i] = a_i, ab[2i+1] = b_i.
struct PrimalPoint {
    ModelParams model;
    std::array<double, kNumAb> ab{};

    friend bool operator==(const PrimalPoint &, const PrimalPoint &) = default;
};

/// y = (y~, alpha~) with y~ on the 3-simplex and alpha~_i in y~_{group(i)} * [-I, I].
struct DualPoint {
    std::array<double, kNumGroups> y{ 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0 };
    std::array<double, kNumPairs> alpha{};

    friend bool operator==(const DualPoint &, const DualPoint &) = default;
};

/// Origin of X: zero weights and zero auxiliaries.
[[nodiscard]] PrimalPoint zero_point(const ProblemSpec &spec);

/// Flat (weights, ab) vector and back.
[[nodiscard]] Eigen::VectorXd flatten(const PrimalPoint &x);
[[nodiscard]] PrimalPoint unflatten(const ModelShape &shape, const Eigen::Ref<const Eigen::VectorXd> &flat);

[[nodiscard]] bool in_primal_domain(const ProblemSpec &spec, const PrimalPoint &x, double tol = 1e-10);
[[nodiscard]] bool in_dual_domain(const DualPoint &y, double interval_radius, double tol = 1e-12);

/// Per-sample F kernel of pair i.
[[nodiscard]] double sample_F(const ProblemSpec &spec, const PrimalPoint &x, const DataPoint &z, std::size_t i);
/// Per-sample G of pair i.
[[nodiscard]] double sample_G(const ProblemSpec &spec, const ModelParams &m, const DataPoint &z, std::size_t i);

/// (F_0 - r, F_1 + F_2 - 1 - kappa, F_3 + F_4 - 1 - kappa)
[[nodiscard]] std::array<double, kNumGroups> F_vector(const ProblemSpec &spec, const PrimalPoint &x, const DataPoint &z, double r);
[[nodiscard]] std::array<double, kNumPairs> G_vector(const ProblemSpec &spec, const ModelParams &m, const DataPoint &z);

[[nodiscard]] double phi(const ProblemSpec &spec, const PrimalPoint &x, const DualPoint &y, const DataPoint &z, double r);

/// Gradient of phi w.r.t. the flat (weights, ab) vector.
[[nodiscard]] Eigen::VectorXd grad_x_phi(const ProblemSpec &spec, const PrimalPoint &x, const DualPoint &y, const DataPoint &z, double r);

/// Gradient of phi w.r.t. (y~, alpha~); phi is linear in y so this is (F_vector, G_vector).
struct DualGradient {
    std::array<double, kNumGroups> u{};
    std::array<double, kNumPairs> v{};
};

[[nodiscard]] DualGradient grad_y_phi(const ProblemSpec &spec, const PrimalPoint &x, const DataPoint &z, double r);

/**
 * Minibatch-averaged primal and dual gradients of phi, with reusable scratch buffers so the
 * solver loop does not allocate. One instance per thread.
 */
class BatchGradient {
  public:
    explicit BatchGradient(const ProblemSpec &spec);

    /// Averages over d[idx[k]]; with `idx` empty the whole dataset is used.
    void evaluate(const PrimalPoint &x, const DualPoint &y, const Dataset &d, std::span<const std::size_t> idx, double r);

    [[nodiscard]] const Eigen::VectorXd &gx() const noexcept { return gx_; }
    [[nodiscard]] const DualGradient &gy() const noexcept { return gy_; }

  private:
    void accumulate(const PrimalPoint &x, const DualPoint &y, const DataPoint &z, double weight);

    const ProblemSpec *spec_;
    /// 1/Pr weights of each pair for the four (label, sensitive) cells
    std::array<std::array<std::array<double, 2>, kNumPairs>, 4> cell_weights_{};
    Eigen::VectorXd gx_;
    DualGradient gy_;
    Eigen::VectorXd grad_h_;
    Eigen::VectorXd hidden_;
};

struct ObjectiveValues {
    double f0{ 0.0 };
    double f1{ 0.0 };
    double f2{ 0.0 };
    bool f1_ok{ false };
    bool f2_ok{ false };
    std::array<double, kNumPairs> contributions{};
    std::array<double, kNumPairs> alpha_star{};

    /// max(f1, f2) - 1 - kappa
    [[nodiscard]] double max_violation(double kappa) const noexcept { return std::max(f1, f2) - 1.0 - kappa; }
};

/// Full-batch (f0, f1, f2) with the inner max over each alpha_i solved in closed form.
[[nodiscard]] ObjectiveValues full_objective(const ProblemSpec &spec, const Dataset &d, const PrimalPoint &x);

/// Same with (rho_hat / 2) ||x - center||^2 added to all three values; feasibility flags refer to
/// the regularized constraints.
[[nodiscard]] ObjectiveValues regularized_objective(const ProblemSpec &spec, const Dataset &d, const PrimalPoint &x, double rho_hat, const PrimalPoint &center);

/// Auxiliaries set to the group means E[h|G_i], E[h|G'_i] (clamped to [-I, I]); these minimize
/// every F-term over (a, b) for fixed w.
[[nodiscard]] PrimalPoint with_optimal_ab(const ProblemSpec &spec, const Dataset &d, const ModelParams &m);

/// full_objective at the analytically optimal auxiliaries: a function of w alone.
[[nodiscard]] ObjectiveValues constraint_audit(const ProblemSpec &spec, const Dataset &d, const ModelParams &m);

}  // namespace fairauc
