#pragma once

#include "fairauc/dataset.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string_view>

namespace fairauc {

enum class ModelKind { Linear, Mlp2 };

inline constexpr std::size_t kDefaultHidden = 10;

[[nodiscard]] std::string_view to_string(ModelKind kind) noexcept;
[[nodiscard]] ModelKind parse_model_kind(std::string_view s);

/// Dimensions of a scorer; `hidden` is ignored for Linear.
struct ModelShape {
    ModelKind kind{ ModelKind::Linear };
    std::size_t input_dim{ 1 };
    std::size_t hidden{ kDefaultHidden };

    [[nodiscard]] std::size_t parameter_count() const noexcept;

    friend bool operator==(const ModelShape &a, const ModelShape &b) {
        return a.kind == b.kind && a.input_dim == b.input_dim && (a.kind == ModelKind::Linear || a.hidden == b.hidden);
    }
};

/**
 * Flat parameter vector of a scorer.
 *
 * Mlp2 layout: hidden weights (row-major H x p, row j feeds hidden unit j), hidden biases (H),
 * output weights (H), output bias (1). The output layer is linear.
 */
struct ModelParams {
    ModelShape shape;
    Eigen::VectorXd weights;

    /// All-zero parameters of the given shape.
    [[nodiscard]] static ModelParams zeros(const ModelShape &shape);
    /// Checks length and finiteness, throwing InvalidArgument.
    void validate() const;

    friend bool operator==(const ModelParams &a, const ModelParams &b) {
        return a.shape == b.shape && a.weights.size() == b.weights.size() && a.weights == b.weights;
    }
};

struct ParamDomain {
    double radius{ 100.0 };
};

[[nodiscard]] double score(const ModelParams &m, const Eigen::Ref<const Eigen::VectorXd> &xi);
[[nodiscard]] Eigen::VectorXd score_gradient(const ModelParams &m, const Eigen::Ref<const Eigen::VectorXd> &xi);

/// Score and gradient in one pass. `grad` must already have parameter_count() entries; `hidden`
/// is scratch space of H entries (unused for Linear). No allocation.
double score_with_gradient(const ModelParams &m, const Eigen::Ref<const Eigen::VectorXd> &xi, Eigen::Ref<Eigen::VectorXd> grad, Eigen::Ref<Eigen::VectorXd> hidden);

/// Scores of every point in `d`.
[[nodiscard]] Eigen::VectorXd score_all(const ModelParams &m, const Dataset &d);

/// Euclidean projection of the whole weight vector onto the ball of `dom.radius`.
[[nodiscard]] ModelParams project_params(ModelParams m, const ParamDomain &dom);

/// Upper bound on |h_w(xi)| over w in the domain and xi in `d`.
[[nodiscard]] double score_bound(const ParamDomain &dom, const Dataset &d, ModelKind kind, std::size_t hidden = kDefaultHidden);

/// Mlp2 parameters with hidden weights and biases uniform in [-scale, scale] and every other entry
/// uniform in the same range unless `zero_output` is set, in which case the output layer is zero
/// (the scorer is then the constant 0).
[[nodiscard]] ModelParams random_mlp2(std::size_t input_dim, std::size_t hidden, std::uint64_t seed, bool zero_output = false, double scale = 0.5);

/// Text checkpoint: header "<kind> <p> <H>", then one value per line with 17 significant digits.
void write_checkpoint(std::ostream &out, const ModelParams &m);
[[nodiscard]] ModelParams read_checkpoint(std::istream &in);

}  // namespace fairauc
