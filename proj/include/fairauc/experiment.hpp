#pragma once

#include "fairauc/dataset.hpp"
#include "fairauc/iqrc.hpp"
#include "fairauc/levelset.hpp"
#include "fairauc/metrics.hpp"
#include "fairauc/model.hpp"
#include "fairauc/reformulation.hpp"
#include "fairauc/smd.hpp"

#include "json.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fairauc {

enum class DataFormat { Libsvm, Csv, Synthetic };
enum class SolverMode { Sfls, Iqrc };
/// Which tracked model a run reports.
enum class Selection { BestValidation, Final };

struct DataConfig {
    DataFormat format{ DataFormat::Synthetic };
    std::string path;
    LibsvmOptions libsvm{};
    CsvOptions csv{};
    SyntheticOptions synthetic{};
    std::uint64_t synthetic_seed{ 0 };
    /// Generate synthetic data when `path` does not exist instead of failing.
    bool fallback_to_synthetic{ false };
    /// Seeded subsample before splitting; 0 keeps everything.
    std::size_t subsample{ 0 };
    /// Scale features by 1 / max ||xi|| over the training split.
    bool normalize{ true };
};

/// SMD settings in experiment terms. primal_step c gives M = 2 D_x^2 / c (so eta_t = c / sqrt(t+1));
/// dual_step sets D_y so that tau_0 = 2 D_y^2 / M equals it. Explicit step_scale/dx/dy win.
struct SmdSettings {
    std::size_t batch_size{ 100 };
    std::optional<double> primal_step{ 1.0 };
    std::optional<double> dual_step{ 100.0 };
    std::optional<double> step_scale{};
    std::optional<double> dx{};
    std::optional<double> dy{};
    std::size_t snapshot_every{ 200 };
    /// Track running averages rather than raw iterates at the snapshot cadence.
    bool snapshot_average{ true };
};

struct ExperimentConfig {
    DataConfig data{};
    ModelKind model{ ModelKind::Linear };
    std::size_t hidden{ kDefaultHidden };
    double radius{ 1.0 };
    FairnessKind fairness{ FairnessKind::GroupAuc };
    double c1{ 0.5 };
    double c2{ 1.0 };
    std::optional<double> interval_radius{};
    std::vector<double> kappas{ 0.1 };
    std::array<double, 3> fractions{ 0.6, 0.2, 0.2 };
    std::uint64_t split_seed{ 0 };
    SolverMode mode{ SolverMode::Sfls };
    SflsConfig sfls{};
    SmdSettings smd{};
    IqrcConfig iqrc{};
    double tie_weight{ 0.5 };
    /// A model is feasible when max(f1, f2) <= 1 + kappa + feasibility_tol on the training split.
    double feasibility_tol{ 1e-3 };
    Selection selection{ Selection::BestValidation };
    std::vector<std::uint64_t> seeds{ 0 };
    std::filesystem::path output_dir{};
    std::size_t workers{ 1 };
    /// Write per-run checkpoints, metrics and traces under output_dir.
    bool write_artifacts{ true };
};

/// Parses and validates; errors are ConfigError carrying the JSON path of the field.
[[nodiscard]] ExperimentConfig parse_config(const nlohmann::json &j);
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path &path);
[[nodiscard]] nlohmann::json to_json(const ExperimentConfig &cfg);

/// FAIRAUC_OUT_DIR and FAIRAUC_THREADS override output_dir and workers.
void apply_environment(ExperimentConfig &cfg);

struct PreparedData {
    Split splits;
    double feature_scale{ 1.0 };
};

/// Load, subsample, split and normalize for one run seed. Deterministic in (cfg, seed).
[[nodiscard]] PreparedData prepare_data(const ExperimentConfig &cfg, std::uint64_t seed);

[[nodiscard]] ProblemSpec build_problem(const ExperimentConfig &cfg, const Dataset &train, double kappa);
[[nodiscard]] SmdConfig build_smd_config(const ExperimentConfig &cfg, const ProblemSpec &spec, std::uint64_t seed);

struct FrontierRow {
    std::string method{ "sfls" };
    double kappa{ 0.0 };
    std::uint64_t seed{ 0 };
    double auc{ 0.0 };
    double gap{ 0.0 };
    double f1{ 0.0 };
    double f2{ 0.0 };
    bool feasible{ false };
    double wall_ms{ 0.0 };
    /// Empty on success; the failure message otherwise.
    std::string error{};
};

[[nodiscard]] std::string frontier_csv_header();
[[nodiscard]] std::string to_csv_row(const FrontierRow &row);

struct RunResult {
    FrontierRow row;
    ModelParams model;
    MetricReport valid_report;
    MetricReport test_report;
    std::size_t snapshots_considered{ 0 };
    std::vector<LevelTraceRow> level_trace;
    std::vector<IqrcTraceRow> iqrc_trace;
};

/// Train at one kappa and seed, select the feasible tracked snapshot with the best validation
/// AUC and evaluate it on the test split.
[[nodiscard]] RunResult run_experiment(const ExperimentConfig &cfg, double kappa, std::uint64_t seed);

/// Train-split audit of a stored model: (f1, f2, feasible) exactly as run_experiment computes them.
struct AuditResult {
    double f1;
    double f2;
    bool feasible;
};

[[nodiscard]] AuditResult audit_model(const ExperimentConfig &cfg, double kappa, std::uint64_t seed, const ModelParams &model);

struct FrontierPoint {
    std::string method;
    double kappa;
    std::size_t runs;
    double auc_mean;
    double auc_se;
    double gap_mean;
    double gap_se;
};

/// Mean and standard error (sample sd / sqrt(n), 0 for n = 1) per (method, kappa) over
/// successful rows, in order of first appearance.
[[nodiscard]] std::vector<FrontierPoint> aggregate(const std::vector<FrontierRow> &rows);

struct SweepResult {
    std::vector<FrontierRow> rows;
    std::vector<FrontierPoint> points;
};

/// Runs every (kappa, seed) pair on cfg.workers threads; failed runs are recorded and skipped in
/// aggregation. Writes frontier.csv, frontier_summary.csv and frontier.svg when output_dir is set.
[[nodiscard]] SweepResult pareto_sweep(const ExperimentConfig &cfg);

struct PostProcessGrid {
    /// omega1 = omega1_step * i for i = 0..omega1_count-1, similarly omega2 from omega2_min.
    std::size_t omega1_count{ 101 };
    double omega1_step{ 0.05 };
    std::size_t omega2_count{ 61 };
    double omega2_min{ -3.0 };
    double omega2_step{ 0.1 };

    [[nodiscard]] double omega1(std::size_t i) const noexcept;
    [[nodiscard]] double omega2(std::size_t j) const noexcept;
};

/// Protected scores become omega1 * s + omega2; unprotected scores are untouched.
[[nodiscard]] std::vector<double> transform_scores(const Dataset &d, std::span<const double> scores, double omega1, double omega2);

struct PostProcessResult {
    double omega1{ 1.0 };
    double omega2{ 0.0 };
    bool feasible{ false };
    MetricReport valid_report;
    MetricReport test_report;
    std::size_t candidates{ 0 };
};

/// Grid search on the validation split for the largest AUC with gap <= kappa; ties go to the
/// smaller gap, then to the smaller ||(omega1 - 1, omega2)||. Without a feasible point the
/// smallest-gap point is returned with feasible = false.
[[nodiscard]] PostProcessResult post_process_baseline(const ModelParams &model, const Dataset &valid, const Dataset &test, FairnessKind kind, double kappa,
                                                      const PostProcessGrid &grid = {}, double tie_weight = 0.5);

}  // namespace fairauc
