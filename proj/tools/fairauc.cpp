#include "fairauc/error.hpp"
#include "fairauc/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

using namespace fairauc;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<std::size_t> workers;
};

void add_common(CLI::App *cmd, Common &c) {
    cmd->add_option("--config", c.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", c.seed, "run seed (default: first entry of seeds)");
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
}

ExperimentConfig load(const Common &c) {
    auto cfg = load_config(c.config);
    apply_environment(cfg);
    if (!c.out.empty()) cfg.output_dir = c.out;
    if (c.workers) cfg.workers = *c.workers;
    return cfg;
}

std::uint64_t run_seed(const Common &c, const ExperimentConfig &cfg) { return c.seed ? *c.seed : cfg.seeds.front(); }

ModelParams load_checkpoint(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open checkpoint " + path);
    return read_checkpoint(in);
}

const Dataset &pick_split(const PreparedData &d, const std::string &name) {
    if (name == "train") return d.splits.train;
    if (name == "valid") return d.splits.valid;
    return d.splits.test;
}

std::string g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{ "Fairness-constrained AUC training with level-set and proximal-point solvers" };
    app.require_subcommand(1);

    Common train_c, eval_c, sweep_c, post_c, audit_c;
    std::optional<double> train_kappa, eval_kappa;
    std::string eval_ckpt, audit_ckpt, post_ckpt, audit_split = "test";

    auto *train = app.add_subcommand("train", "train one model per kappa in the config");
    add_common(train, train_c);
    train->add_option("--kappa", train_kappa, "train at this kappa only")->check(CLI::NonNegativeNumber);

    auto *evaluate = app.add_subcommand("evaluate", "test metrics and training feasibility of a checkpoint");
    add_common(evaluate, eval_c);
    evaluate->add_option("--checkpoint", eval_ckpt, "model checkpoint")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--kappa", eval_kappa, "kappa for the feasibility audit (default: first in config)")->check(CLI::NonNegativeNumber);

    auto *sweep = app.add_subcommand("sweep", "Pareto sweep over kappa and seeds");
    add_common(sweep, sweep_c);

    auto *post = app.add_subcommand("postprocess", "score post-processing baseline on an unconstrained model");
    add_common(post, post_c);
    post->add_option("--checkpoint", post_ckpt, "unconstrained model (trained when omitted)")->check(CLI::ExistingFile);

    auto *audit = app.add_subcommand("audit", "fairness metrics of a checkpoint for every metric kind");
    add_common(audit, audit_c);
    audit->add_option("--checkpoint", audit_ckpt, "model checkpoint")->required()->check(CLI::ExistingFile);
    audit->add_option("--split", audit_split, "train, valid or test")->check(CLI::IsMember({ "train", "valid", "test" }));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train) {
            auto cfg = load(train_c);
            auto seed = run_seed(train_c, cfg);
            std::vector<double> kappas = train_kappa ? std::vector<double>{ *train_kappa } : cfg.kappas;
            std::cout << "method," << frontier_csv_header() << '\n';
            for (double k : kappas) {
                auto res = run_experiment(cfg, k, seed);
                std::cout << res.row.method << ',' << to_csv_row(res.row) << '\n';
            }
        } else if (*evaluate) {
            auto cfg = load(eval_c);
            auto seed = run_seed(eval_c, cfg);
            double kappa = eval_kappa ? *eval_kappa : cfg.kappas.front();
            auto model = load_checkpoint(eval_ckpt);
            auto data = prepare_data(cfg, seed);
            auto rep = fairness_gap(data.splits.test, model, cfg.fairness, cfg.tie_weight);
            auto a = audit_model(cfg, kappa, seed, model);
            FrontierRow row;
            row.kappa = kappa;
            row.seed = seed;
            row.auc = rep.auc;
            row.gap = rep.fairness_gap;
            row.f1 = a.f1;
            row.f2 = a.f2;
            row.feasible = a.feasible;
            std::cout << frontier_csv_header() << '\n' << to_csv_row(row) << '\n';
        } else if (*sweep) {
            auto cfg = load(sweep_c);
            if (sweep_c.seed) cfg.seeds = { *sweep_c.seed };
            auto res = pareto_sweep(cfg);
            std::cout << "method,kappa,runs,auc_mean,auc_se,gap_mean,gap_se\n";
            for (const auto &p : res.points)
                std::cout << p.method << ',' << p.kappa << ',' << p.runs << ',' << g17(p.auc_mean) << ',' << g17(p.auc_se) << ',' << g17(p.gap_mean) << ','
                          << g17(p.gap_se) << '\n';
            std::size_t failed = 0;
            for (const auto &r : res.rows)
                if (!r.error.empty()) {
                    ++failed;
                    std::cerr << "run kappa=" << r.kappa << " seed=" << r.seed << " failed: " << r.error << '\n';
                }
            if (failed == res.rows.size()) return 1;
        } else if (*post) {
            auto cfg = load(post_c);
            auto seed = run_seed(post_c, cfg);
            auto data = prepare_data(cfg, seed);
            ModelParams model;
            if (!post_ckpt.empty()) {
                model = load_checkpoint(post_ckpt);
            } else {
                // Constraints never bind at this budget.
                auto unconstrained = cfg;
                unconstrained.write_artifacts = false;
                model = run_experiment(unconstrained, 1e6, seed).model;
            }
            std::ofstream file;
            if (!cfg.output_dir.empty()) {
                std::filesystem::create_directories(cfg.output_dir);
                file.open(cfg.output_dir / "postprocess.csv");
            }
            const std::string header = "kappa,seed,omega1,omega2,feasible,valid_auc,valid_gap,test_auc,test_gap";
            std::cout << header << '\n';
            if (file) file << header << '\n';
            for (double k : cfg.kappas) {
                auto r = post_process_baseline(model, data.splits.valid, data.splits.test, cfg.fairness, k, {}, cfg.tie_weight);
                std::string line = g17(k) + ',' + std::to_string(seed) + ',' + g17(r.omega1) + ',' + g17(r.omega2) + ',' + (r.feasible ? "1" : "0") + ',' +
                                   g17(r.valid_report.auc) + ',' + g17(r.valid_report.fairness_gap) + ',' + g17(r.test_report.auc) + ',' +
                                   g17(r.test_report.fairness_gap);
                std::cout << line << '\n';
                if (file) file << line << '\n';
            }
        } else if (*audit) {
            auto cfg = load(audit_c);
            auto seed = run_seed(audit_c, cfg);
            auto model = load_checkpoint(audit_ckpt);
            auto data = prepare_data(cfg, seed);
            const auto &d = pick_split(data, audit_split);
            std::cout << metric_csv_header() << '\n';
            for (auto kind : kAllFairnessKinds) std::cout << to_csv_row(fairness_gap(d, model, kind, cfg.tie_weight)) << '\n';
        }
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
