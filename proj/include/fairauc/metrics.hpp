#pragma once

#include "fairauc/dataset.hpp"
#include "fairauc/model.hpp"

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>

namespace fairauc {

enum class FairnessKind { GroupAuc, InterGroupPairwise, IntraGroupPairwise, AegPositive, AegNegative, BpsnBnsp };

inline constexpr std::array<FairnessKind, 6> kAllFairnessKinds{ FairnessKind::GroupAuc, FairnessKind::InterGroupPairwise, FairnessKind::IntraGroupPairwise,
                                                                FairnessKind::AegPositive, FairnessKind::AegNegative, FairnessKind::BpsnBnsp };

[[nodiscard]] std::string_view to_string(FairnessKind kind) noexcept;
[[nodiscard]] FairnessKind parse_fairness_kind(std::string_view s);

/// (G1, G1', G2, G2'): the metric is |AUC(G1, G1') - AUC(G2, G2')|.
struct GroupQuad {
    GroupSelector g1;
    GroupSelector g1p;
    GroupSelector g2;
    GroupSelector g2p;
};

[[nodiscard]] GroupQuad group_pairs_for(FairnessKind kind) noexcept;

inline constexpr GroupSelector kPositives{ LabelFilter::PosOnly, SensitiveFilter::Any };
inline constexpr GroupSelector kNegatives{ LabelFilter::NegOnly, SensitiveFilter::Any };

struct Membership {
    bool in_g{ false };
    bool in_gp{ false };
};

/**
 * Fraction of pairs (i in G, j in G') with score_i > score_j, ties counted with `tie_weight`.
 * A point in both sets appears on both sides, so self-pairs are included. O(n log n).
 */
[[nodiscard]] double empirical_auc(std::span<const double> scores, std::span<const Membership> membership, double tie_weight = 0.5);

/// Convenience overload selecting G and G' from a dataset.
[[nodiscard]] double empirical_auc(std::span<const double> scores, const Dataset &d, const GroupSelector &g, const GroupSelector &gp, double tie_weight = 0.5);

struct MetricReport {
    FairnessKind kind{ FairnessKind::GroupAuc };
    double auc{ 0.0 };
    double fairness_gap{ 0.0 };
    std::array<double, 2> per_pair_aucs{};
    /// |G1|, |G1'|, |G2|, |G2'|
    std::array<std::size_t, 4> group_sizes{};

    friend bool operator==(const MetricReport &, const MetricReport &) = default;
};

[[nodiscard]] MetricReport fairness_gap(const Dataset &d, const ModelParams &m, FairnessKind kind, double tie_weight = 0.5);
[[nodiscard]] MetricReport fairness_gap_from_scores(const Dataset &d, std::span<const double> scores, FairnessKind kind, double tie_weight = 0.5);

[[nodiscard]] std::string metric_csv_header();
[[nodiscard]] std::string to_csv_row(const MetricReport &r);

}  // namespace fairauc
