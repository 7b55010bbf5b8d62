#include "fairauc/experiment.hpp"

#include "fairauc/error.hpp"
#include "fairauc/plot.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace fairauc {

using nlohmann::json;

namespace {

// Typed, path-aware access to one JSON object; unknown keys are rejected by finish().
class Reader {
  public:
    Reader(const json &j, std::string path) : j_{ j }, path_{ std::move(path) } {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    [[nodiscard]] std::string at(const std::string &key) const { return path_.empty() ? key : path_ + "." + key; }

    const json *find(const std::string &key) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return nullptr;
        return &*it;
    }

    bool has(const std::string &key) const { return j_.contains(key); }

    void number(const std::string &key, double &out) {
        if (auto *v = find(key)) out = as_number(*v, at(key));
    }

    void optional_number(const std::string &key, std::optional<double> &out) {
        if (auto *v = find(key)) {
            if (v->is_null()) out.reset();
            else out = as_number(*v, at(key));
        }
    }

    template <class U> void unsigned_int(const std::string &key, U &out) {
        if (auto *v = find(key)) out = static_cast<U>(as_unsigned(*v, at(key)));
    }

    void boolean(const std::string &key, bool &out) {
        if (auto *v = find(key)) {
            if (!v->is_boolean()) throw ConfigError(at(key), "expected true or false");
            out = v->get<bool>();
        }
    }

    void string(const std::string &key, std::string &out) {
        if (auto *v = find(key)) {
            if (!v->is_string()) throw ConfigError(at(key), "expected a string");
            out = v->get<std::string>();
        }
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown field");
    }

    static double as_number(const json &v, const std::string &path) {
        if (!v.is_number()) throw ConfigError(path, "expected a number");
        double x = v.get<double>();
        if (!std::isfinite(x)) throw ConfigError(path, "must be finite");
        return x;
    }

    static std::uint64_t as_unsigned(const json &v, const std::string &path) {
        if (v.is_number_unsigned()) return v.get<std::uint64_t>();
        if (v.is_number_integer()) throw ConfigError(path, "must be non-negative");
        throw ConfigError(path, "expected a non-negative integer");
    }

  private:
    const json &j_;
    std::string path_;
    std::set<std::string> seen_;
};

void require(bool ok, const std::string &field, const std::string &msg) {
    if (!ok) throw ConfigError(field, msg);
}

DataFormat parse_format(const std::string &s, const std::string &path) {
    if (s == "libsvm") return DataFormat::Libsvm;
    if (s == "csv") return DataFormat::Csv;
    if (s == "synthetic") return DataFormat::Synthetic;
    throw ConfigError(path, "unknown format '" + s + "' (libsvm, csv, synthetic)");
}

std::string_view format_name(DataFormat f) {
    switch (f) {
    case DataFormat::Libsvm: return "libsvm";
    case DataFormat::Csv: return "csv";
    case DataFormat::Synthetic: return "synthetic";
    }
    return "?";
}

void parse_data(const json &j, DataConfig &d) {
    Reader r(j, "data");
    if (auto *v = r.find("format")) {
        if (!v->is_string()) throw ConfigError(r.at("format"), "expected a string");
        d.format = parse_format(v->get<std::string>(), r.at("format"));
    }
    r.string("path", d.path);
    r.boolean("fallback_to_synthetic", d.fallback_to_synthetic);
    r.unsigned_int("sensitive_index", d.libsvm.sensitive_index);
    r.number("sensitive_threshold", d.libsvm.sensitive_threshold);
    if (r.has("keep_sensitive_feature")) {
        bool keep = false;
        r.boolean("keep_sensitive_feature", keep);
        d.libsvm.keep_sensitive_feature = keep;
        d.csv.keep_sensitive_feature = keep;
    }
    r.string("label_column", d.csv.label_column);
    r.string("sensitive_column", d.csv.sensitive_column);
    r.string("positive_label", d.csv.positive_label);
    r.string("protected_token", d.csv.protected_token);
    r.unsigned_int("subsample", d.subsample);
    r.boolean("normalize", d.normalize);
    if (auto *v = r.find("synthetic")) {
        Reader s(*v, "data.synthetic");
        auto &o = d.synthetic;
        s.unsigned_int("n", o.n);
        s.unsigned_int("dim", o.dim);
        s.number("separation", o.separation);
        s.number("group_shift", o.group_shift);
        s.number("protected_fraction", o.protected_fraction);
        s.number("positive_rate_protected", o.positive_rate_protected);
        s.number("positive_rate_unprotected", o.positive_rate_unprotected);
        s.boolean("sensitive_feature", o.sensitive_feature);
        s.unsigned_int("seed", d.synthetic_seed);
        s.finish();
        require(o.n >= 2, "data.synthetic.n", "must be at least 2");
        require(o.dim >= 1, "data.synthetic.dim", "must be at least 1");
        auto prob = [](double p) { return p > 0.0 && p < 1.0; };
        require(prob(o.protected_fraction), "data.synthetic.protected_fraction", "must lie in (0, 1)");
        require(prob(o.positive_rate_protected), "data.synthetic.positive_rate_protected", "must lie in (0, 1)");
        require(prob(o.positive_rate_unprotected), "data.synthetic.positive_rate_unprotected", "must lie in (0, 1)");
    }
    r.finish();
    if (d.format != DataFormat::Synthetic) require(!d.path.empty(), "data.path", "required for format " + std::string(format_name(d.format)));
    if (d.format == DataFormat::Libsvm) require(d.libsvm.sensitive_index >= 1, "data.sensitive_index", "is 1-based");
    if (d.format == DataFormat::Csv) {
        require(!d.csv.label_column.empty(), "data.label_column", "required for csv");
        require(!d.csv.sensitive_column.empty(), "data.sensitive_column", "required for csv");
        require(!d.csv.positive_label.empty(), "data.positive_label", "required for csv");
        require(!d.csv.protected_token.empty(), "data.protected_token", "required for csv");
    }
}

void parse_kappas(const json &v, std::vector<double> &out) {
    out.clear();
    if (v.is_number()) {
        out.push_back(Reader::as_number(v, "kappa"));
    } else if (v.is_array()) {
        require(!v.empty(), "kappa", "list must not be empty");
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(Reader::as_number(v[i], "kappa[" + std::to_string(i) + "]"));
    } else {
        throw ConfigError("kappa", "expected a number or a list of numbers");
    }
    for (std::size_t i = 0; i < out.size(); ++i)
        require(out[i] >= 0.0, out.size() == 1 && v.is_number() ? "kappa" : "kappa[" + std::to_string(i) + "]", "must be non-negative");
}

void parse_solver(const json &j, ExperimentConfig &cfg, bool &mode_given) {
    Reader r(j, "solver");
    if (auto *v = r.find("mode")) {
        if (!v->is_string()) throw ConfigError("solver.mode", "expected a string");
        auto m = v->get<std::string>();
        if (m == "sfls") cfg.mode = SolverMode::Sfls;
        else if (m == "iqrc") cfg.mode = SolverMode::Iqrc;
        else throw ConfigError("solver.mode", "unknown mode '" + m + "' (sfls, iqrc)");
        mode_given = true;
    }
    if (auto *v = r.find("sfls")) {
        Reader s(*v, "solver.sfls");
        auto &c = cfg.sfls;
        s.optional_number("r0", c.r0);
        s.number("eps_opt", c.eps_opt);
        s.number("eps_oracle", c.eps_oracle);
        s.number("delta", c.delta);
        s.number("theta", c.theta);
        s.unsigned_int("max_outer", c.max_outer);
        s.unsigned_int("oracle_iterations", c.oracle_iterations);
        s.number("init_margin_rel", c.init_margin_rel);
        s.number("init_margin_abs", c.init_margin_abs);
        s.finish();
        require(c.eps_opt > 0.0, "solver.sfls.eps_opt", "must be positive");
        require(c.eps_oracle > 0.0, "solver.sfls.eps_oracle", "must be positive");
        require(c.delta > 0.0 && c.delta < 1.0, "solver.sfls.delta", "must lie in (0, 1)");
        require(c.theta >= 1.0, "solver.sfls.theta", "must be at least 1");
        require(c.max_outer >= 1, "solver.sfls.max_outer", "must be positive");
        require(c.oracle_iterations >= 1, "solver.sfls.oracle_iterations", "must be positive");
        require(c.init_margin_rel >= 0.0, "solver.sfls.init_margin_rel", "must be non-negative");
        require(c.init_margin_abs >= 0.0, "solver.sfls.init_margin_abs", "must be non-negative");
    }
    if (auto *v = r.find("smd")) {
        Reader s(*v, "solver.smd");
        auto &c = cfg.smd;
        s.unsigned_int("batch_size", c.batch_size);
        s.optional_number("primal_step", c.primal_step);
        s.optional_number("dual_step", c.dual_step);
        s.optional_number("step_scale", c.step_scale);
        s.optional_number("dx", c.dx);
        s.optional_number("dy", c.dy);
        s.unsigned_int("snapshot_every", c.snapshot_every);
        s.boolean("snapshot_average", c.snapshot_average);
        s.finish();
        auto pos = [](const std::optional<double> &x) { return !x || *x > 0.0; };
        require(pos(c.primal_step), "solver.smd.primal_step", "must be positive");
        require(pos(c.dual_step), "solver.smd.dual_step", "must be positive");
        require(pos(c.step_scale), "solver.smd.step_scale", "must be positive");
        require(pos(c.dx), "solver.smd.dx", "must be positive");
        require(pos(c.dy), "solver.smd.dy", "must be positive");
        require(!c.dual_step || c.dy || c.step_scale || c.primal_step, "solver.smd.dual_step", "needs step_scale or primal_step");
    }
    if (auto *v = r.find("iqrc")) {
        Reader s(*v, "solver.iqrc");
        auto &c = cfg.iqrc;
        s.number("rho_hat", c.rho_hat);
        s.unsigned_int("outer_iterations", c.outer_iterations);
        s.number("eps_hat", c.eps_hat);
        s.number("delta", c.delta);
        s.finish();
        require(c.rho_hat > 0.0, "solver.iqrc.rho_hat", "must be positive");
        require(c.outer_iterations >= 1, "solver.iqrc.outer_iterations", "must be positive");
        require(c.eps_hat > 0.0, "solver.iqrc.eps_hat", "must be positive");
        require(c.delta > 0.0 && c.delta < 1.0, "solver.iqrc.delta", "must lie in (0, 1)");
    }
    r.finish();
}

std::string fmt(const char *f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

std::string g17(double x) { return fmt("%.17g", x); }

}  // namespace

ExperimentConfig parse_config(const json &j) {
    ExperimentConfig cfg;
    Reader r(j, "");
    if (auto *v = r.find("data")) parse_data(*v, cfg.data);
    if (auto *v = r.find("model")) {
        Reader m(*v, "model");
        if (auto *k = m.find("kind")) {
            if (!k->is_string()) throw ConfigError("model.kind", "expected a string");
            try {
                cfg.model = parse_model_kind(k->get<std::string>());
            } catch (const Error &e) {
                throw ConfigError("model.kind", e.what());
            }
        }
        m.unsigned_int("hidden", cfg.hidden);
        m.number("radius", cfg.radius);
        m.finish();
        require(cfg.hidden >= 1, "model.hidden", "must be positive");
        require(cfg.radius > 0.0, "model.radius", "must be positive");
    }
    if (auto *v = r.find("fairness")) {
        if (!v->is_string()) throw ConfigError("fairness", "expected a string");
        try {
            cfg.fairness = parse_fairness_kind(v->get<std::string>());
        } catch (const Error &e) {
            throw ConfigError("fairness", e.what());
        }
    }
    r.number("c1", cfg.c1);
    r.number("c2", cfg.c2);
    require(cfg.c1 > 0.0, "c1", "must be positive");
    require(cfg.c2 > 0.0, "c2", "must be positive");
    r.optional_number("interval_radius", cfg.interval_radius);
    require(!cfg.interval_radius || *cfg.interval_radius > 0.0, "interval_radius", "must be positive");
    if (auto *v = r.find("kappa")) parse_kappas(*v, cfg.kappas);
    if (auto *v = r.find("split")) {
        Reader s(*v, "split");
        if (auto *f = s.find("fractions")) {
            if (!f->is_array() || f->size() != 3) throw ConfigError("split.fractions", "expected three numbers");
            double sum = 0.0;
            for (std::size_t i = 0; i < 3; ++i) {
                cfg.fractions[i] = Reader::as_number((*f)[i], "split.fractions[" + std::to_string(i) + "]");
                require(cfg.fractions[i] > 0.0, "split.fractions[" + std::to_string(i) + "]", "must be positive");
                sum += cfg.fractions[i];
            }
            require(std::abs(sum - 1.0) <= 1e-9, "split.fractions", "must sum to 1");
        }
        s.unsigned_int("seed", cfg.split_seed);
        s.finish();
    }
    bool mode_given = false;
    cfg.mode = cfg.model == ModelKind::Linear ? SolverMode::Sfls : SolverMode::Iqrc;
    if (auto *v = r.find("solver")) parse_solver(*v, cfg, mode_given);
    if (mode_given) {
        bool consistent = (cfg.model == ModelKind::Linear) == (cfg.mode == SolverMode::Sfls);
        require(consistent, "solver.mode", cfg.model == ModelKind::Linear ? "linear models use sfls" : "mlp2 models use iqrc");
    }
    if (auto *v = r.find("evaluation")) {
        Reader e(*v, "evaluation");
        e.number("tie_weight", cfg.tie_weight);
        e.number("feasibility_tol", cfg.feasibility_tol);
        if (auto *sel = e.find("selection")) {
            if (!sel->is_string()) throw ConfigError("evaluation.selection", "expected a string");
            auto name = sel->get<std::string>();
            if (name == "best_validation") cfg.selection = Selection::BestValidation;
            else if (name == "final") cfg.selection = Selection::Final;
            else throw ConfigError("evaluation.selection", "unknown selection '" + name + "' (best_validation, final)");
        }
        e.finish();
        require(cfg.tie_weight >= 0.0 && cfg.tie_weight <= 1.0, "evaluation.tie_weight", "must lie in [0, 1]");
        require(cfg.feasibility_tol >= 0.0, "evaluation.feasibility_tol", "must be non-negative");
    }
    if (auto *v = r.find("seeds")) {
        if (!v->is_array() || v->empty()) throw ConfigError("seeds", "expected a non-empty list");
        cfg.seeds.clear();
        for (std::size_t i = 0; i < v->size(); ++i) cfg.seeds.push_back(Reader::as_unsigned((*v)[i], "seeds[" + std::to_string(i) + "]"));
    }
    if (auto *v = r.find("output_dir")) {
        if (!v->is_string()) throw ConfigError("output_dir", "expected a string");
        cfg.output_dir = v->get<std::string>();
    }
    r.unsigned_int("workers", cfg.workers);
    require(cfg.workers >= 1, "workers", "must be positive");
    r.boolean("write_artifacts", cfg.write_artifacts);
    r.finish();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("<file>", "cannot open " + path.string());
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error &e) {
        throw ConfigError("<file>", std::string("malformed JSON: ") + e.what());
    }
    auto cfg = parse_config(j);
    // Relative paths are taken relative to the config file.
    auto base = path.parent_path();
    if (!cfg.data.path.empty() && std::filesystem::path(cfg.data.path).is_relative()) cfg.data.path = (base / cfg.data.path).lexically_normal().string();
    return cfg;
}

json to_json(const ExperimentConfig &cfg) {
    json j;
    auto &d = j["data"];
    d["format"] = format_name(cfg.data.format);
    if (!cfg.data.path.empty()) d["path"] = cfg.data.path;
    d["fallback_to_synthetic"] = cfg.data.fallback_to_synthetic;
    d["subsample"] = cfg.data.subsample;
    d["normalize"] = cfg.data.normalize;
    if (cfg.data.format == DataFormat::Libsvm) {
        d["sensitive_index"] = cfg.data.libsvm.sensitive_index;
        d["sensitive_threshold"] = cfg.data.libsvm.sensitive_threshold;
        d["keep_sensitive_feature"] = cfg.data.libsvm.keep_sensitive_feature;
    } else if (cfg.data.format == DataFormat::Csv) {
        d["label_column"] = cfg.data.csv.label_column;
        d["sensitive_column"] = cfg.data.csv.sensitive_column;
        d["positive_label"] = cfg.data.csv.positive_label;
        d["protected_token"] = cfg.data.csv.protected_token;
        d["keep_sensitive_feature"] = cfg.data.csv.keep_sensitive_feature;
    }
    const auto &o = cfg.data.synthetic;
    d["synthetic"] = { { "n", o.n },
                       { "dim", o.dim },
                       { "separation", o.separation },
                       { "group_shift", o.group_shift },
                       { "protected_fraction", o.protected_fraction },
                       { "positive_rate_protected", o.positive_rate_protected },
                       { "positive_rate_unprotected", o.positive_rate_unprotected },
                       { "sensitive_feature", o.sensitive_feature },
                       { "seed", cfg.data.synthetic_seed } };
    j["model"] = { { "kind", to_string(cfg.model) }, { "hidden", cfg.hidden }, { "radius", cfg.radius } };
    j["fairness"] = to_string(cfg.fairness);
    j["c1"] = cfg.c1;
    j["c2"] = cfg.c2;
    if (cfg.interval_radius) j["interval_radius"] = *cfg.interval_radius;
    j["kappa"] = cfg.kappas;
    j["split"] = { { "fractions", cfg.fractions }, { "seed", cfg.split_seed } };
    auto opt = [](const std::optional<double> &x) { return x ? json(*x) : json(nullptr); };
    auto &s = j["solver"];
    s["mode"] = cfg.mode == SolverMode::Sfls ? "sfls" : "iqrc";
    s["sfls"] = { { "r0", opt(cfg.sfls.r0) },
                  { "eps_opt", cfg.sfls.eps_opt },
                  { "eps_oracle", cfg.sfls.eps_oracle },
                  { "delta", cfg.sfls.delta },
                  { "theta", cfg.sfls.theta },
                  { "max_outer", cfg.sfls.max_outer },
                  { "oracle_iterations", cfg.sfls.oracle_iterations },
                  { "init_margin_rel", cfg.sfls.init_margin_rel },
                  { "init_margin_abs", cfg.sfls.init_margin_abs } };
    s["smd"] = { { "batch_size", cfg.smd.batch_size },  { "primal_step", opt(cfg.smd.primal_step) }, { "dual_step", opt(cfg.smd.dual_step) },
                 { "step_scale", opt(cfg.smd.step_scale) }, { "dx", opt(cfg.smd.dx) },                  { "dy", opt(cfg.smd.dy) },
                 { "snapshot_every", cfg.smd.snapshot_every }, { "snapshot_average", cfg.smd.snapshot_average } };
    s["iqrc"] = { { "rho_hat", cfg.iqrc.rho_hat }, { "outer_iterations", cfg.iqrc.outer_iterations }, { "eps_hat", cfg.iqrc.eps_hat }, { "delta", cfg.iqrc.delta } };
    j["evaluation"] = { { "tie_weight", cfg.tie_weight }, { "feasibility_tol", cfg.feasibility_tol },
                          { "selection", cfg.selection == Selection::Final ? "final" : "best_validation" } };
    j["seeds"] = cfg.seeds;
    j["output_dir"] = cfg.output_dir.string();
    j["workers"] = cfg.workers;
    j["write_artifacts"] = cfg.write_artifacts;
    return j;
}

void apply_environment(ExperimentConfig &cfg) {
    if (const char *out = std::getenv("FAIRAUC_OUT_DIR"); out && *out) cfg.output_dir = out;
    if (const char *t = std::getenv("FAIRAUC_THREADS"); t && *t) {
        char *end = nullptr;
        long n = std::strtol(t, &end, 10);
        if (*end != '\0' || n < 1) throw ConfigError("FAIRAUC_THREADS", "expected a positive integer");
        cfg.workers = static_cast<std::size_t>(n);
    }
}

namespace {

struct RunSeeds {
    std::uint64_t subsample;
    std::uint64_t split;
    std::uint64_t solver;
};

RunSeeds run_seeds(const ExperimentConfig &cfg, std::uint64_t seed) {
    auto base = derive_seed(cfg.split_seed, seed);
    return { derive_seed(base, 0), derive_seed(base, 1), derive_seed(base, 2) };
}

Dataset load_dataset(const DataConfig &dc) {
    auto fmt = dc.format;
    if (fmt != DataFormat::Synthetic && dc.fallback_to_synthetic && !std::filesystem::exists(dc.path)) fmt = DataFormat::Synthetic;
    if (fmt == DataFormat::Synthetic) return make_biased_gaussian(dc.synthetic, dc.synthetic_seed);
    std::ifstream in(dc.path);
    if (!in) throw InvalidArgument("cannot open dataset " + dc.path);
    return fmt == DataFormat::Libsvm ? parse_libsvm(in, dc.libsvm) : parse_csv(in, dc.csv);
}

}  // namespace

PreparedData prepare_data(const ExperimentConfig &cfg, std::uint64_t seed) {
    auto seeds = run_seeds(cfg, seed);
    Dataset full = load_dataset(cfg.data);
    if (cfg.data.subsample > 0 && cfg.data.subsample < full.size()) full = subsample(full, cfg.data.subsample, seeds.subsample);
    PreparedData out{ split(full, cfg.fractions, seeds.split), 1.0 };
    if (cfg.data.normalize) {
        double m = max_feature_norm(out.splits.train);
        if (m > 0.0) {
            out.feature_scale = 1.0 / m;
            out.splits.train = scaled(out.splits.train, out.feature_scale);
            out.splits.valid = scaled(out.splits.valid, out.feature_scale);
            out.splits.test = scaled(out.splits.test, out.feature_scale);
        }
    }
    return out;
}

ProblemSpec build_problem(const ExperimentConfig &cfg, const Dataset &train, double kappa) {
    ProblemOptions o;
    o.kind = cfg.fairness;
    o.c1 = cfg.c1;
    o.c2 = cfg.c2;
    o.kappa = kappa;
    o.model = cfg.model;
    o.hidden = cfg.hidden;
    o.domain.radius = cfg.radius;
    o.interval_radius = cfg.interval_radius;
    return make_problem_spec(train, o);
}

SmdConfig build_smd_config(const ExperimentConfig &cfg, const ProblemSpec &spec, std::uint64_t seed) {
    SmdConfig s;
    s.iterations = cfg.sfls.oracle_iterations;
    s.batch_size = cfg.smd.batch_size;
    s.seed = seed;
    s.snapshot_every = cfg.smd.snapshot_every;
    s.snapshot_average = cfg.smd.snapshot_average;
    double dx = cfg.smd.dx ? *cfg.smd.dx : primal_diameter(spec);
    s.dx = dx;
    if (cfg.smd.step_scale) s.step_scale = *cfg.smd.step_scale;
    else if (cfg.smd.primal_step) s.step_scale = 2.0 * dx * dx / *cfg.smd.primal_step;
    if (cfg.smd.dy) s.dy = *cfg.smd.dy;
    else if (cfg.smd.dual_step && s.step_scale) s.dy = std::sqrt(*cfg.smd.dual_step * *s.step_scale / 2.0);
    return s;
}

std::string frontier_csv_header() { return "kappa,seed,auc,gap,f1,f2,feasible,wall_ms"; }

std::string to_csv_row(const FrontierRow &row) {
    std::ostringstream o;
    o << fmt("%.10g", row.kappa) << ',' << row.seed << ',' << g17(row.auc) << ',' << g17(row.gap) << ',' << g17(row.f1) << ',' << g17(row.f2) << ','
      << (row.feasible ? 1 : 0) << ',' << fmt("%.3f", row.wall_ms);
    return o.str();
}

namespace {

bool is_feasible(const ObjectiveValues &v, double kappa, double tol) { return std::max(v.f1, v.f2) <= 1.0 + kappa + tol; }

std::string run_stem(double kappa, std::uint64_t seed) { return "k" + fmt("%g", kappa) + "_s" + std::to_string(seed); }

void write_run_artifacts(const std::filesystem::path &dir, const RunResult &res) {
    std::filesystem::create_directories(dir);
    auto stem = run_stem(res.row.kappa, res.row.seed);
    {
        std::ofstream out(dir / (stem + ".model.txt"));
        write_checkpoint(out, res.model);
    }
    {
        std::ofstream out(dir / (stem + ".metrics.csv"));
        out << "split," << metric_csv_header() << '\n';
        out << "valid," << to_csv_row(res.valid_report) << '\n';
        out << "test," << to_csv_row(res.test_report) << '\n';
    }
    {
        std::ofstream out(dir / (stem + ".row.csv"));
        out << frontier_csv_header() << '\n' << to_csv_row(res.row) << '\n';
    }
    if (!res.level_trace.empty()) {
        std::ofstream out(dir / (stem + ".levels.csv"));
        write_level_trace_csv(out, res.level_trace);
    }
    if (!res.iqrc_trace.empty()) {
        std::ofstream out(dir / (stem + ".iqrc.csv"));
        write_displacement_trace_csv(out, res.iqrc_trace);
    }
}

}  // namespace

RunResult run_experiment(const ExperimentConfig &cfg, double kappa, std::uint64_t seed) {
    if (!(kappa >= 0.0)) throw ConfigError("kappa", "must be non-negative");
    auto t0 = std::chrono::steady_clock::now();
    auto seeds = run_seeds(cfg, seed);
    auto data = prepare_data(cfg, seed);
    const auto &train = data.splits.train;
    auto spec = build_problem(cfg, train, kappa);
    auto smd = build_smd_config(cfg, spec, seeds.solver);

    std::vector<ModelParams> tracked;
    smd.on_snapshot = [&](std::size_t, const PrimalPoint &x) { tracked.push_back(x.model); };
    SflsConfig sfls = cfg.sfls;
    sfls.on_level = [&](std::size_t, double, double, const PrimalPoint &x) { tracked.push_back(x.model); };

    RunResult res;
    res.row.method = cfg.mode == SolverMode::Sfls ? "sfls" : "iqrc";
    res.row.kappa = kappa;
    res.row.seed = seed;
    ModelParams final_model;
    if (cfg.mode == SolverMode::Sfls) {
        auto out = run_sfls(spec, train, sfls, smd);
        res.level_trace = std::move(out.level_trace);
        final_model = out.solution.model;
    } else {
        IqrcConfig iq = cfg.iqrc;
        iq.seed = seeds.solver;
        auto out = run_iqrc(spec, train, iq, sfls, smd);
        res.iqrc_trace = std::move(out.displacement_trace);
        for (const auto &x : out.iterates) tracked.push_back(x.model);
        final_model = out.solution.model;
    }
    if (cfg.selection == Selection::Final) tracked.clear();
    tracked.push_back(final_model);

    // Feasible snapshot with the best validation AUC; the earliest wins ties.
    std::optional<std::size_t> best;
    double best_auc = -1.0;
    ObjectiveValues best_audit;
    for (std::size_t i = 0; i < tracked.size(); ++i) {
        auto audit = constraint_audit(spec, train, tracked[i]);
        if (!is_feasible(audit, kappa, cfg.feasibility_tol)) continue;
        double auc = fairness_gap(data.splits.valid, tracked[i], cfg.fairness, cfg.tie_weight).auc;
        if (!best || auc > best_auc) {
            best = i;
            best_auc = auc;
            best_audit = audit;
        }
    }
    res.snapshots_considered = tracked.size();
    if (best) {
        res.model = tracked[*best];
        res.row.feasible = true;
    } else {
        res.model = final_model;
        best_audit = constraint_audit(spec, train, final_model);
        res.row.feasible = false;
    }
    res.row.f1 = best_audit.f1;
    res.row.f2 = best_audit.f2;
    res.valid_report = fairness_gap(data.splits.valid, res.model, cfg.fairness, cfg.tie_weight);
    res.test_report = fairness_gap(data.splits.test, res.model, cfg.fairness, cfg.tie_weight);
    res.row.auc = res.test_report.auc;
    res.row.gap = res.test_report.fairness_gap;
    res.row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (cfg.write_artifacts && !cfg.output_dir.empty()) write_run_artifacts(cfg.output_dir / "runs", res);
    return res;
}

AuditResult audit_model(const ExperimentConfig &cfg, double kappa, std::uint64_t seed, const ModelParams &model) {
    auto data = prepare_data(cfg, seed);
    auto spec = build_problem(cfg, data.splits.train, kappa);
    auto v = constraint_audit(spec, data.splits.train, model);
    return { v.f1, v.f2, is_feasible(v, kappa, cfg.feasibility_tol) };
}

std::vector<FrontierPoint> aggregate(const std::vector<FrontierRow> &rows) {
    std::vector<FrontierPoint> out;
    std::vector<std::vector<const FrontierRow *>> members;
    for (const auto &r : rows) {
        if (!r.error.empty()) continue;
        std::size_t k = 0;
        while (k < out.size() && !(out[k].method == r.method && out[k].kappa == r.kappa)) ++k;
        if (k == out.size()) {
            out.push_back({ r.method, r.kappa, 0, 0, 0, 0, 0 });
            members.emplace_back();
        }
        members[k].push_back(&r);
    }
    auto mean_se = [](const std::vector<double> &x) {
        double n = static_cast<double>(x.size()), m = 0.0;
        for (double v : x) m += v;
        m /= n;
        if (x.size() < 2) return std::pair{ m, 0.0 };
        double ss = 0.0;
        for (double v : x) ss += (v - m) * (v - m);
        return std::pair{ m, std::sqrt(ss / (n - 1.0) / n) };
    };
    for (std::size_t k = 0; k < out.size(); ++k) {
        std::vector<double> auc, gap;
        for (const auto *r : members[k]) {
            auc.push_back(r->auc);
            gap.push_back(r->gap);
        }
        out[k].runs = auc.size();
        std::tie(out[k].auc_mean, out[k].auc_se) = mean_se(auc);
        std::tie(out[k].gap_mean, out[k].gap_se) = mean_se(gap);
    }
    return out;
}

SweepResult pareto_sweep(const ExperimentConfig &cfg) {
    struct Task {
        double kappa;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (double k : cfg.kappas)
        for (auto s : cfg.seeds) tasks.push_back({ k, s });

    SweepResult res;
    res.rows.resize(tasks.size());
    std::atomic<std::size_t> next{ 0 };
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) {
            auto &row = res.rows[i];
            try {
                row = run_experiment(cfg, tasks[i].kappa, tasks[i].seed).row;
            } catch (const std::exception &e) {
                row = FrontierRow{};
                row.method = cfg.mode == SolverMode::Sfls ? "sfls" : "iqrc";
                row.kappa = tasks[i].kappa;
                row.seed = tasks[i].seed;
                row.auc = row.gap = row.f1 = row.f2 = std::numeric_limits<double>::quiet_NaN();
                row.error = e.what();
                if (row.error.empty()) row.error = "unknown failure";
            }
        }
    };
    std::size_t n_workers = std::clamp<std::size_t>(cfg.workers, 1, std::max<std::size_t>(tasks.size(), 1));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto &t : pool) t.join();
    }
    res.points = aggregate(res.rows);

    if (!cfg.output_dir.empty()) {
        std::filesystem::create_directories(cfg.output_dir);
        {
            std::ofstream out(cfg.output_dir / "frontier.csv");
            out << frontier_csv_header() << '\n';
            for (const auto &r : res.rows) out << to_csv_row(r) << '\n';
        }
        {
            std::ofstream out(cfg.output_dir / "frontier_summary.csv");
            out << "method,kappa,runs,auc_mean,auc_se,gap_mean,gap_se\n";
            for (const auto &p : res.points)
                out << p.method << ',' << fmt("%.10g", p.kappa) << ',' << p.runs << ',' << g17(p.auc_mean) << ',' << g17(p.auc_se) << ',' << g17(p.gap_mean) << ','
                    << g17(p.gap_se) << '\n';
        }
        bool any_error = std::any_of(res.rows.begin(), res.rows.end(), [](const FrontierRow &r) { return !r.error.empty(); });
        if (any_error) {
            std::ofstream out(cfg.output_dir / "errors.csv");
            out << "kappa,seed,message\n";
            for (const auto &r : res.rows) {
                if (r.error.empty()) continue;
                std::string msg = r.error;
                std::replace(msg.begin(), msg.end(), '"', '\'');
                out << fmt("%.10g", r.kappa) << ',' << r.seed << ",\"" << msg << "\"\n";
            }
        }
        if (!res.points.empty()) {
            std::ofstream out(cfg.output_dir / "frontier.svg");
            out << emit_plot(res.points);
        }
    }
    return res;
}

double PostProcessGrid::omega1(std::size_t i) const noexcept { return omega1_step * static_cast<double>(i); }

double PostProcessGrid::omega2(std::size_t j) const noexcept {
    // Integer offsets keep omega2 = 0 exact on the default grid.
    auto zero = static_cast<long long>(std::llround(-omega2_min / omega2_step));
    return omega2_step * static_cast<double>(static_cast<long long>(j) - zero);
}

std::vector<double> transform_scores(const Dataset &d, std::span<const double> scores, double omega1, double omega2) {
    if (scores.size() != d.size()) throw InvalidArgument("transform_scores: one score per point required");
    std::vector<double> out(scores.begin(), scores.end());
    for (std::size_t i = 0; i < out.size(); ++i)
        if (d[i].sensitive > 0) out[i] = omega1 * scores[i] + omega2;
    return out;
}

PostProcessResult post_process_baseline(const ModelParams &model, const Dataset &valid, const Dataset &test, FairnessKind kind, double kappa,
                                        const PostProcessGrid &grid, double tie_weight) {
    if (!(kappa >= 0.0)) throw InvalidArgument("post_process_baseline: kappa must be non-negative");
    if (grid.omega1_count == 0 || grid.omega2_count == 0) throw InvalidArgument("post_process_baseline: empty grid");
    Eigen::VectorXd sv = score_all(model, valid);
    std::span<const double> base(sv.data(), static_cast<std::size_t>(sv.size()));

    struct Cand {
        double w1, w2;
        MetricReport rep;
        double dist;
    };
    std::optional<Cand> best_feasible, best_gap;
    auto better_feasible = [](const Cand &a, const Cand &b) {
        if (a.rep.auc != b.rep.auc) return a.rep.auc > b.rep.auc;
        if (a.rep.fairness_gap != b.rep.fairness_gap) return a.rep.fairness_gap < b.rep.fairness_gap;
        return a.dist < b.dist;
    };
    auto better_gap = [](const Cand &a, const Cand &b) {
        if (a.rep.fairness_gap != b.rep.fairness_gap) return a.rep.fairness_gap < b.rep.fairness_gap;
        if (a.rep.auc != b.rep.auc) return a.rep.auc > b.rep.auc;
        return a.dist < b.dist;
    };
    PostProcessResult res;
    for (std::size_t i = 0; i < grid.omega1_count; ++i) {
        for (std::size_t j = 0; j < grid.omega2_count; ++j) {
            Cand c{ grid.omega1(i), grid.omega2(j), {}, 0.0 };
            auto s = transform_scores(valid, base, c.w1, c.w2);
            c.rep = fairness_gap_from_scores(valid, s, kind, tie_weight);
            c.dist = std::hypot(c.w1 - 1.0, c.w2);
            ++res.candidates;
            if (c.rep.fairness_gap <= kappa && (!best_feasible || better_feasible(c, *best_feasible))) best_feasible = c;
            if (!best_gap || better_gap(c, *best_gap)) best_gap = c;
        }
    }
    const Cand &pick = best_feasible ? *best_feasible : *best_gap;
    res.omega1 = pick.w1;
    res.omega2 = pick.w2;
    res.feasible = best_feasible.has_value();
    res.valid_report = pick.rep;
    Eigen::VectorXd tv = score_all(model, test);
    auto ts = transform_scores(test, std::span<const double>(tv.data(), static_cast<std::size_t>(tv.size())), res.omega1, res.omega2);
    res.test_report = fairness_gap_from_scores(test, ts, kind, tie_weight);
    return res;
}

}  // namespace fairauc
