#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace fairauc {

using Rng = std::mt19937_64;

/// z = (xi, zeta, gamma): features, label in {+1,-1}, sensitive attribute in {+1,-1}.
struct DataPoint {
    Eigen::VectorXd features;
    int label{ 1 };
    int sensitive{ 1 };

    friend bool operator==(const DataPoint &a, const DataPoint &b) {
        return a.label == b.label && a.sensitive == b.sensitive && a.features.size() == b.features.size() && a.features == b.features;
    }
};

enum class LabelFilter { PosOnly, NegOnly, Any };
enum class SensitiveFilter { Protected, Unprotected, Any };

struct GroupSelector {
    LabelFilter label{ LabelFilter::Any };
    SensitiveFilter sensitive{ SensitiveFilter::Any };

    [[nodiscard]] bool matches(int label_value, int sensitive_value) const noexcept {
        const bool l = label == LabelFilter::Any || (label == LabelFilter::PosOnly ? label_value > 0 : label_value < 0);
        const bool s = sensitive == SensitiveFilter::Any || (sensitive == SensitiveFilter::Protected ? sensitive_value > 0 : sensitive_value < 0);
        return l && s;
    }
    [[nodiscard]] bool matches(const DataPoint &z) const noexcept { return matches(z.label, z.sensitive); }

    /// Short human readable form, e.g. "{zeta=+1,gamma=-1}" or "{any}".
    [[nodiscard]] std::string name() const;

    friend bool operator==(const GroupSelector &, const GroupSelector &) = default;
};

inline constexpr GroupSelector kAnyGroup{};

/**
 * Immutable, nonempty collection of points sharing one feature dimension.
 * Safe to share between threads.
 */
class Dataset {
  public:
    explicit Dataset(std::vector<DataPoint> points);

    [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] const DataPoint &operator[](std::size_t i) const noexcept { return points_[i]; }
    [[nodiscard]] const std::vector<DataPoint> &points() const noexcept { return points_; }

    friend bool operator==(const Dataset &a, const Dataset &b) { return a.dim_ == b.dim_ && a.points_ == b.points_; }

  private:
    std::vector<DataPoint> points_;
    std::size_t dim_{ 0 };
};

struct LibsvmOptions {
    /// 1-based feature index that carries the sensitive attribute.
    std::size_t sensitive_index{ 1 };
    double sensitive_threshold{ 0.0 };
    /// The sensitive feature stays in xi unless this is cleared.
    bool keep_sensitive_feature{ true };
};

[[nodiscard]] Dataset parse_libsvm(std::istream &in, const LibsvmOptions &opts);
[[nodiscard]] Dataset parse_libsvm(std::string_view text, const LibsvmOptions &opts);

/// Writes every point as "<label> idx:val ...", always emitting the last coordinate so that the
/// dimension survives a round trip. Values are printed with 17 significant digits.
[[nodiscard]] std::string serialize_libsvm(const Dataset &d);

struct CsvOptions {
    std::string label_column;
    std::string sensitive_column;
    std::string positive_label;
    std::string protected_token;
    /// When set, the sensitive column is kept as a +-1 feature.
    bool keep_sensitive_feature{ false };
};

[[nodiscard]] Dataset parse_csv(std::istream &in, const CsvOptions &opts);
[[nodiscard]] Dataset parse_csv(std::string_view text, const CsvOptions &opts);

struct Split {
    Dataset train;
    Dataset valid;
    Dataset test;
};

[[nodiscard]] Split split(const Dataset &d, std::array<double, 3> fractions, std::uint64_t seed);

[[nodiscard]] std::size_t group_count(const Dataset &d, const GroupSelector &g);
[[nodiscard]] double group_probability(const Dataset &d, const GroupSelector &g);

/// Uniform with-replacement indices.
[[nodiscard]] std::vector<std::size_t> sample_indices(std::size_t n, std::size_t size, Rng &rng);
[[nodiscard]] std::vector<DataPoint> sample_minibatch(const Dataset &d, std::size_t size, Rng &rng);

/// Seeded random subset of n points without replacement (n >= size returns a shuffled copy).
[[nodiscard]] Dataset subsample(const Dataset &d, std::size_t n, std::uint64_t seed);

/// Largest Euclidean feature norm.
[[nodiscard]] double max_feature_norm(const Dataset &d);

/// Copy of `d` with every feature vector multiplied by `factor`.
[[nodiscard]] Dataset scaled(const Dataset &d, double factor);

/**
 * Two-class Gaussian data with a group-dependent shift, used when the real benchmark files are
 * not available. Positives are centred at +separation/2 along a fixed direction, negatives at
 * -separation/2; protected points are additionally shifted by `group_shift` along the same
 * direction, so an unconstrained scorer ranks protected points higher. The sensitive attribute is
 * appended as the last feature when `sensitive_feature` is set.
 */
struct SyntheticOptions {
    std::size_t n{ 500 };
    std::size_t dim{ 5 };
    double separation{ 2.0 };
    double group_shift{ 1.0 };
    double protected_fraction{ 0.4 };
    /// Pr(label = +1 | protected) and Pr(label = +1 | unprotected).
    double positive_rate_protected{ 0.5 };
    double positive_rate_unprotected{ 0.3 };
    bool sensitive_feature{ true };
};

[[nodiscard]] Dataset make_biased_gaussian(const SyntheticOptions &opts, std::uint64_t seed);

}  // namespace fairauc
