#include "fairauc/metrics.hpp"

#include "fairauc/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

namespace fairauc {

namespace {

constexpr GroupSelector sel(LabelFilter l, SensitiveFilter s) {
    return GroupSelector{ l, s };
}

constexpr auto Pos = LabelFilter::PosOnly;
constexpr auto Neg = LabelFilter::NegOnly;
constexpr auto AnyL = LabelFilter::Any;
constexpr auto Prot = SensitiveFilter::Protected;
constexpr auto Unprot = SensitiveFilter::Unprotected;
constexpr auto AnyS = SensitiveFilter::Any;

std::vector<Membership> membership_of(const Dataset &d, const GroupSelector &g, const GroupSelector &gp) {
    std::vector<Membership> out(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        out[i] = Membership{ g.matches(d[i]), gp.matches(d[i]) };
    }
    return out;
}

}  // namespace

std::string_view to_string(FairnessKind kind) noexcept {
    switch (kind) {
        case FairnessKind::GroupAuc: return "group_auc";
        case FairnessKind::InterGroupPairwise: return "inter_group_pairwise";
        case FairnessKind::IntraGroupPairwise: return "intra_group_pairwise";
        case FairnessKind::AegPositive: return "aeg_positive";
        case FairnessKind::AegNegative: return "aeg_negative";
        case FairnessKind::BpsnBnsp: return "bpsn_bnsp";
    }
    return "unknown";
}

FairnessKind parse_fairness_kind(std::string_view s) {
    for (const FairnessKind k : kAllFairnessKinds) {
        if (to_string(k) == s) {
            return k;
        }
    }
    throw InvalidArgument("unknown fairness kind '" + std::string{ s } + "'");
}

GroupQuad group_pairs_for(FairnessKind kind) noexcept {
    switch (kind) {
        case FairnessKind::GroupAuc:
            return { sel(AnyL, Prot), sel(AnyL, Unprot), kAnyGroup, kAnyGroup };
        case FairnessKind::InterGroupPairwise:
            return { sel(Pos, Prot), sel(Neg, Unprot), sel(Pos, Unprot), sel(Neg, Prot) };
        case FairnessKind::IntraGroupPairwise:
            return { sel(Pos, Prot), sel(Neg, Prot), sel(Pos, Unprot), sel(Neg, Unprot) };
        case FairnessKind::AegPositive:
            return { sel(Pos, Prot), sel(Pos, AnyS), kAnyGroup, kAnyGroup };
        case FairnessKind::AegNegative:
            return { sel(Neg, Prot), sel(Neg, AnyS), kAnyGroup, kAnyGroup };
        case FairnessKind::BpsnBnsp:
            return { sel(Pos, AnyS), sel(Neg, Prot), sel(Pos, Prot), sel(Neg, AnyS) };
    }
    return {};
}

double empirical_auc(std::span<const double> scores, std::span<const Membership> membership, double tie_weight) {
    if (scores.size() != membership.size()) {
        throw InvalidArgument("scores and membership differ in length");
    }
    std::vector<double> pos;
    std::vector<double> neg;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (membership[i].in_g) {
            pos.push_back(scores[i]);
        }
        if (membership[i].in_gp) {
            neg.push_back(scores[i]);
        }
    }
    if (pos.empty() || neg.empty()) {
        throw InvalidArgument(pos.empty() ? "empirical_auc: G is empty" : "empirical_auc: G' is empty");
    }
    std::sort(neg.begin(), neg.end());
    std::size_t greater = 0;
    std::size_t ties = 0;
    for (const double s : pos) {
        const auto lo = std::lower_bound(neg.begin(), neg.end(), s);
        const auto hi = std::upper_bound(lo, neg.end(), s);
        greater += static_cast<std::size_t>(lo - neg.begin());
        ties += static_cast<std::size_t>(hi - lo);
    }
    return (static_cast<double>(greater) + tie_weight * static_cast<double>(ties)) / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

double empirical_auc(std::span<const double> scores, const Dataset &d, const GroupSelector &g, const GroupSelector &gp, double tie_weight) {
    const auto m = membership_of(d, g, gp);
    return empirical_auc(scores, m, tie_weight);
}

MetricReport fairness_gap_from_scores(const Dataset &d, std::span<const double> scores, FairnessKind kind, double tie_weight) {
    const GroupQuad q = group_pairs_for(kind);
    MetricReport r;
    r.kind = kind;
    const std::array<const GroupSelector *, 4> groups{ &q.g1, &q.g1p, &q.g2, &q.g2p };
    for (std::size_t k = 0; k < 4; ++k) {
        r.group_sizes[k] = group_count(d, *groups[k]);
        if (r.group_sizes[k] == 0) {
            throw InvalidArgument("fairness group " + groups[k]->name() + " is empty");
        }
    }
    if (group_count(d, kPositives) == 0 || group_count(d, kNegatives) == 0) {
        throw InvalidArgument("dataset needs both positive and negative labels");
    }
    r.auc = empirical_auc(scores, d, kPositives, kNegatives, tie_weight);
    r.per_pair_aucs[0] = empirical_auc(scores, d, q.g1, q.g1p, tie_weight);
    r.per_pair_aucs[1] = empirical_auc(scores, d, q.g2, q.g2p, tie_weight);
    r.fairness_gap = std::abs(r.per_pair_aucs[0] - r.per_pair_aucs[1]);
    return r;
}

MetricReport fairness_gap(const Dataset &d, const ModelParams &m, FairnessKind kind, double tie_weight) {
    const Eigen::VectorXd s = score_all(m, d);
    return fairness_gap_from_scores(d, std::span<const double>{ s.data(), static_cast<std::size_t>(s.size()) }, kind, tie_weight);
}

std::string metric_csv_header() {
    return "kind,auc,gap,auc_pair1,auc_pair2,n1,n1p,n2,n2p";
}

std::string to_csv_row(const MetricReport &r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%.10g,%.10g,%.10g,%.10g,%zu,%zu,%zu,%zu", std::string{ to_string(r.kind) }.c_str(), r.auc, r.fairness_gap, r.per_pair_aucs[0], r.per_pair_aucs[1],
                  r.group_sizes[0], r.group_sizes[1], r.group_sizes[2], r.group_sizes[3]);
    return buf;
}

}  // namespace fairauc
