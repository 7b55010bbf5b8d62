#include "fairauc/model.hpp"

#include "fairauc/error.hpp"

#include <cmath>
#include <limits>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <string>

namespace fairauc {

namespace {

using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

double sigmoid(double t) noexcept {
    return 1.0 / (1.0 + std::exp(-t));
}

void check_input(const ModelParams &m, Eigen::Index size) {
    if (static_cast<std::size_t>(size) != m.shape.input_dim) {
        throw InvalidArgument("feature dimension " + std::to_string(size) + " does not match model input dimension " + std::to_string(m.shape.input_dim));
    }
    if (static_cast<std::size_t>(m.weights.size()) != m.shape.parameter_count()) {
        throw InvalidArgument("model weight vector has wrong length");
    }
}

}  // namespace

std::string_view to_string(ModelKind kind) noexcept {
    return kind == ModelKind::Linear ? "linear" : "mlp2";
}

ModelKind parse_model_kind(std::string_view s) {
    if (s == "linear") {
        return ModelKind::Linear;
    }
    if (s == "mlp2") {
        return ModelKind::Mlp2;
    }
    throw InvalidArgument("unknown model kind '" + std::string{ s } + "' (expected linear or mlp2)");
}

std::size_t ModelShape::parameter_count() const noexcept {
    if (kind == ModelKind::Linear) {
        return input_dim;
    }
    return hidden * input_dim + 2 * hidden + 1;
}

ModelParams ModelParams::zeros(const ModelShape &shape) {
    if (shape.input_dim == 0 || (shape.kind == ModelKind::Mlp2 && shape.hidden == 0)) {
        throw InvalidArgument("model dimensions must be positive");
    }
    return ModelParams{ shape, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(shape.parameter_count())) };
}

void ModelParams::validate() const {
    if (static_cast<std::size_t>(weights.size()) != shape.parameter_count()) {
        throw InvalidArgument("model weight vector has length " + std::to_string(weights.size()) + ", expected " + std::to_string(shape.parameter_count()));
    }
    if (!weights.allFinite()) {
        throw InvalidArgument("model weights contain non-finite values");
    }
}

double score_with_gradient(const ModelParams &m, const Eigen::Ref<const Eigen::VectorXd> &xi, Eigen::Ref<Eigen::VectorXd> grad, Eigen::Ref<Eigen::VectorXd> hidden) {
    if (m.shape.kind == ModelKind::Linear) {
        grad = xi;
        return m.weights.dot(xi);
    }
    const auto p = static_cast<Eigen::Index>(m.shape.input_dim);
    const auto H = static_cast<Eigen::Index>(m.shape.hidden);
    const RowMajorMap W{ m.weights.data(), H, p };
    const auto c = m.weights.segment(H * p, H);
    const auto v = m.weights.segment(H * p + H, H);
    const double b = m.weights(H * p + 2 * H);

    hidden.noalias() = W * xi;
    hidden += c;
    hidden = hidden.unaryExpr([](double t) { return sigmoid(t); });
    double h = b + v.dot(hidden);

    // d/dW_j = v_j s_j (1 - s_j) xi,  d/dc_j = v_j s_j (1 - s_j)
    for (Eigen::Index j = 0; j < H; ++j) {
        const double delta = v(j) * hidden(j) * (1.0 - hidden(j));
        grad.segment(j * p, p) = delta * xi;
        grad(H * p + j) = delta;
    }
    grad.segment(H * p + H, H) = hidden;
    grad(H * p + 2 * H) = 1.0;
    return h;
}

double score(const ModelParams &m, const Eigen::Ref<const Eigen::VectorXd> &xi) {
    check_input(m, xi.size());
    if (m.shape.kind == ModelKind::Linear) {
        return m.weights.dot(xi);
    }
    const auto p = static_cast<Eigen::Index>(m.shape.input_dim);
    const auto H = static_cast<Eigen::Index>(m.shape.hidden);
    const RowMajorMap W{ m.weights.data(), H, p };
    Eigen::VectorXd z = W * xi + m.weights.segment(H * p, H);
    double h = m.weights(H * p + 2 * H);
    for (Eigen::Index j = 0; j < H; ++j) {
        h += m.weights(H * p + H + j) * sigmoid(z(j));
    }
    return h;
}

Eigen::VectorXd score_gradient(const ModelParams &m, const Eigen::Ref<const Eigen::VectorXd> &xi) {
    check_input(m, xi.size());
    Eigen::VectorXd grad(m.weights.size());
    Eigen::VectorXd hidden(static_cast<Eigen::Index>(m.shape.kind == ModelKind::Mlp2 ? m.shape.hidden : 0));
    score_with_gradient(m, xi, grad, hidden);
    return grad;
}

Eigen::VectorXd score_all(const ModelParams &m, const Dataset &d) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) {
        out(static_cast<Eigen::Index>(i)) = score(m, d[i].features);
    }
    return out;
}

ModelParams project_params(ModelParams m, const ParamDomain &dom) {
    const double norm = m.weights.norm();
    // the rescaled norm can come out a few ulps above the radius; treat that band as inside so
    // that projecting twice is a no-op
    if (norm > dom.radius * (1.0 + 4.0 * std::numeric_limits<double>::epsilon())) {
        m.weights *= dom.radius / norm;
    }
    return m;
}

double score_bound(const ParamDomain &dom, const Dataset &d, ModelKind kind, std::size_t hidden) {
    if (kind == ModelKind::Linear) {
        return dom.radius * max_feature_norm(d);
    }
    // |b + v^T s| <= |b| + ||v|| ||s|| with every sigmoid output in (0, 1)
    return dom.radius * std::sqrt(static_cast<double>(hidden)) + dom.radius;
}

ModelParams random_mlp2(std::size_t input_dim, std::size_t hidden, std::uint64_t seed, bool zero_output, double scale) {
    ModelParams m = ModelParams::zeros(ModelShape{ ModelKind::Mlp2, input_dim, hidden });
    Rng rng{ seed };
    std::uniform_real_distribution<double> unif{ -scale, scale };
    const auto n_hidden = static_cast<Eigen::Index>(hidden * input_dim + hidden);
    const Eigen::Index n_total = m.weights.size();
    for (Eigen::Index k = 0; k < (zero_output ? n_hidden : n_total); ++k) {
        m.weights(k) = unif(rng);
    }
    return m;
}

void write_checkpoint(std::ostream &out, const ModelParams &m) {
    out << to_string(m.shape.kind) << ' ' << m.shape.input_dim << ' ' << (m.shape.kind == ModelKind::Mlp2 ? m.shape.hidden : 0) << '\n';
    char buf[40];
    for (Eigen::Index k = 0; k < m.weights.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g\n", m.weights(k));
        out << buf;
    }
}

ModelParams read_checkpoint(std::istream &in) {
    std::string kind;
    std::size_t p = 0;
    std::size_t H = 0;
    if (!(in >> kind >> p >> H)) {
        throw ParseError("malformed checkpoint header", 1);
    }
    ModelShape shape{ parse_model_kind(kind), p, H };
    if (shape.kind == ModelKind::Linear) {
        shape.hidden = kDefaultHidden;
    }
    ModelParams m = ModelParams::zeros(shape);
    for (Eigen::Index k = 0; k < m.weights.size(); ++k) {
        if (!(in >> m.weights(k))) {
            throw ParseError("checkpoint ends after " + std::to_string(k) + " of " + std::to_string(m.weights.size()) + " values", static_cast<std::size_t>(k) + 2);
        }
    }
    m.validate();
    return m;
}

}  // namespace fairauc
