#include "fairauc/dataset.hpp"

#include "fairauc/error.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <istream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <utility>

namespace fairauc {

namespace {

void strip_cr(std::string &line) {
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
}

std::string_view trim(std::string_view s) {
    const auto is_space = [](char c) { return c == ' ' || c == '\t'; };
    while (!s.empty() && is_space(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && is_space(s.back())) {
        s.remove_suffix(1);
    }
    return s;
}

bool parse_double(std::string_view s, double &out) {
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    if (s.empty()) {
        return false;
    }
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

std::vector<std::string_view> split_fields(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(delim, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

std::string_view filter_name(LabelFilter f) {
    switch (f) {
        case LabelFilter::PosOnly: return "zeta=+1";
        case LabelFilter::NegOnly: return "zeta=-1";
        case LabelFilter::Any: return "";
    }
    return "";
}

std::string_view filter_name(SensitiveFilter f) {
    switch (f) {
        case SensitiveFilter::Protected: return "gamma=+1";
        case SensitiveFilter::Unprotected: return "gamma=-1";
        case SensitiveFilter::Any: return "";
    }
    return "";
}

}  // namespace

std::string GroupSelector::name() const {
    const auto l = filter_name(label);
    const auto s = filter_name(sensitive);
    if (l.empty() && s.empty()) {
        return "{any}";
    }
    std::string out = "{";
    out += l;
    if (!l.empty() && !s.empty()) {
        out += ',';
    }
    out += s;
    out += '}';
    return out;
}

Dataset::Dataset(std::vector<DataPoint> points) :
    points_{ std::move(points) } {
    if (points_.empty()) {
        throw InvalidArgument("dataset is empty");
    }
    dim_ = static_cast<std::size_t>(points_.front().features.size());
    if (dim_ == 0) {
        throw InvalidArgument("dataset has zero feature dimension");
    }
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const DataPoint &z = points_[i];
        if (static_cast<std::size_t>(z.features.size()) != dim_) {
            throw InvalidArgument("point " + std::to_string(i) + " has " + std::to_string(z.features.size()) + " features, expected " + std::to_string(dim_));
        }
        if ((z.label != 1 && z.label != -1) || (z.sensitive != 1 && z.sensitive != -1)) {
            throw InvalidArgument("point " + std::to_string(i) + ": label and sensitive attribute must be +1 or -1");
        }
        if (!z.features.allFinite()) {
            throw InvalidArgument("point " + std::to_string(i) + " has non-finite features");
        }
    }
}

Dataset parse_libsvm(std::istream &in, const LibsvmOptions &opts) {
    struct Row {
        int label;
        std::vector<std::pair<std::size_t, double>> entries;
    };
    std::vector<Row> rows;
    std::size_t max_index = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        const std::string_view body = trim(line);
        if (body.empty()) {
            continue;
        }
        std::istringstream tokens{ std::string{ body } };
        std::string tok;
        tokens >> tok;
        double label = 0.0;
        if (!parse_double(tok, label)) {
            throw ParseError("cannot parse label '" + tok + "'", line_no);
        }
        if (label != 1.0 && label != -1.0) {
            throw ParseError("label must be +1 or -1, got '" + tok + "'", line_no);
        }
        Row row{ label > 0 ? 1 : -1, {} };
        std::size_t last = 0;
        while (tokens >> tok) {
            const auto colon = tok.find(':');
            if (colon == std::string::npos) {
                throw ParseError("expected idx:value, got '" + tok + "'", line_no);
            }
            std::size_t idx = 0;
            const std::string_view idx_str{ tok.data(), colon };
            const auto [ptr, ec] = std::from_chars(idx_str.data(), idx_str.data() + idx_str.size(), idx);
            if (ec != std::errc{} || ptr != idx_str.data() + idx_str.size() || idx == 0) {
                throw ParseError("invalid feature index in '" + tok + "'", line_no);
            }
            if (idx <= last) {
                throw ParseError("feature indices must be strictly increasing", line_no);
            }
            double value = 0.0;
            if (!parse_double(std::string_view{ tok }.substr(colon + 1), value)) {
                throw ParseError("invalid feature value in '" + tok + "'", line_no);
            }
            last = idx;
            row.entries.emplace_back(idx, value);
        }
        max_index = std::max(max_index, last);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw ParseError("no data lines", 0);
    }
    if (max_index == 0) {
        throw ParseError("no features in any line", 0);
    }
    if (opts.sensitive_index == 0 || opts.sensitive_index > max_index) {
        throw InvalidArgument("sensitive_index " + std::to_string(opts.sensitive_index) + " out of range [1, " + std::to_string(max_index) + "]");
    }

    const std::size_t s = opts.sensitive_index - 1;
    const std::size_t dim = opts.keep_sensitive_feature ? max_index : max_index - 1;
    if (dim == 0) {
        throw InvalidArgument("dropping the sensitive feature leaves no features");
    }
    std::vector<DataPoint> points;
    points.reserve(rows.size());
    for (const Row &row : rows) {
        Eigen::VectorXd dense = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(max_index));
        for (const auto &[idx, value] : row.entries) {
            dense(static_cast<Eigen::Index>(idx - 1)) = value;
        }
        DataPoint z;
        z.label = row.label;
        z.sensitive = dense(static_cast<Eigen::Index>(s)) > opts.sensitive_threshold ? 1 : -1;
        if (opts.keep_sensitive_feature) {
            z.features = std::move(dense);
        } else {
            z.features.resize(static_cast<Eigen::Index>(dim));
            const auto si = static_cast<Eigen::Index>(s);
            z.features.head(si) = dense.head(si);
            z.features.tail(static_cast<Eigen::Index>(dim) - si) = dense.tail(static_cast<Eigen::Index>(dim) - si);
        }
        points.push_back(std::move(z));
    }
    return Dataset{ std::move(points) };
}

Dataset parse_libsvm(std::string_view text, const LibsvmOptions &opts) {
    std::istringstream in{ std::string{ text } };
    return parse_libsvm(in, opts);
}

std::string serialize_libsvm(const Dataset &d) {
    std::string out;
    char buf[64];
    for (const DataPoint &z : d.points()) {
        out += z.label > 0 ? "+1" : "-1";
        const auto p = static_cast<Eigen::Index>(d.dim());
        for (Eigen::Index k = 0; k < p; ++k) {
            const double v = z.features(k);
            if (v == 0.0 && k + 1 < p) {
                continue;
            }
            const int len = std::snprintf(buf, sizeof buf, " %lld:%.17g", static_cast<long long>(k + 1), v);
            out.append(buf, static_cast<std::size_t>(len));
        }
        out += '\n';
    }
    return out;
}

Dataset parse_csv(std::istream &in, const CsvOptions &opts) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (!trim(line).empty()) {
            for (const auto f : split_fields(line, ',')) {
                header.emplace_back(f);
            }
            break;
        }
    }
    if (header.empty()) {
        throw ParseError("missing header row", 0);
    }
    const auto find_column = [&](const std::string &name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw ParseError("missing column '" + name + "'", 1);
        }
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t label_col = find_column(opts.label_column);
    const std::size_t sens_col = find_column(opts.sensitive_column);
    if (label_col == sens_col) {
        throw InvalidArgument("label and sensitive columns must differ");
    }

    std::vector<std::size_t> feature_cols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c != label_col && c != sens_col) {
            feature_cols.push_back(c);
        }
    }
    const std::size_t dim = feature_cols.size() + (opts.keep_sensitive_feature ? 1 : 0);
    if (dim == 0) {
        throw ParseError("no feature columns", 1);
    }

    std::vector<DataPoint> points;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split_fields(line, ',');
        if (cells.size() != header.size()) {
            throw ParseError("expected " + std::to_string(header.size()) + " cells, got " + std::to_string(cells.size()), line_no);
        }
        DataPoint z;
        z.label = cells[label_col] == opts.positive_label ? 1 : -1;
        z.sensitive = cells[sens_col] == opts.protected_token ? 1 : -1;
        z.features.resize(static_cast<Eigen::Index>(dim));
        for (std::size_t k = 0; k < feature_cols.size(); ++k) {
            double v = 0.0;
            if (!parse_double(cells[feature_cols[k]], v)) {
                throw ParseError("non-numeric cell at (row " + std::to_string(line_no) + ", column '" + header[feature_cols[k]] + "'): '" + std::string{ cells[feature_cols[k]] } + "'", line_no);
            }
            z.features(static_cast<Eigen::Index>(k)) = v;
        }
        if (opts.keep_sensitive_feature) {
            z.features(static_cast<Eigen::Index>(dim - 1)) = z.sensitive;
        }
        points.push_back(std::move(z));
    }
    if (points.empty()) {
        throw ParseError("empty body", line_no);
    }
    return Dataset{ std::move(points) };
}

Dataset parse_csv(std::string_view text, const CsvOptions &opts) {
    std::istringstream in{ std::string{ text } };
    return parse_csv(in, opts);
}

Split split(const Dataset &d, std::array<double, 3> fractions, std::uint64_t seed) {
    for (const double f : fractions) {
        if (!(f > 0.0)) {
            throw InvalidArgument("split fractions must be positive");
        }
    }
    if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9) {
        throw InvalidArgument("split fractions must sum to 1");
    }
    const std::size_t n = d.size();
    const auto n_valid = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fractions[1]));
    const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fractions[2]));
    if (n_valid == 0 || n_test == 0 || n_valid + n_test >= n) {
        throw InvalidArgument("split of " + std::to_string(n) + " points leaves an empty piece");
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{ 0 });
    Rng rng{ seed };
    std::shuffle(perm.begin(), perm.end(), rng);

    const std::size_t n_train = n - n_valid - n_test;
    const auto take = [&](std::size_t begin, std::size_t count) {
        std::vector<DataPoint> pts;
        pts.reserve(count);
        for (std::size_t i = begin; i < begin + count; ++i) {
            pts.push_back(d[perm[i]]);
        }
        return Dataset{ std::move(pts) };
    };
    return Split{ take(0, n_train), take(n_train, n_valid), take(n_train + n_valid, n_test) };
}

std::size_t group_count(const Dataset &d, const GroupSelector &g) {
    return static_cast<std::size_t>(std::count_if(d.points().begin(), d.points().end(), [&](const DataPoint &z) { return g.matches(z); }));
}

double group_probability(const Dataset &d, const GroupSelector &g) {
    return static_cast<double>(group_count(d, g)) / static_cast<double>(d.size());
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t size, Rng &rng) {
    if (n == 0 || size == 0) {
        throw InvalidArgument("sample_indices needs n >= 1 and size >= 1");
    }
    std::uniform_int_distribution<std::size_t> pick{ 0, n - 1 };
    std::vector<std::size_t> out(size);
    for (auto &i : out) {
        i = pick(rng);
    }
    return out;
}

std::vector<DataPoint> sample_minibatch(const Dataset &d, std::size_t size, Rng &rng) {
    std::vector<DataPoint> out;
    out.reserve(size);
    for (const std::size_t i : sample_indices(d.size(), size, rng)) {
        out.push_back(d[i]);
    }
    return out;
}

Dataset subsample(const Dataset &d, std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> perm(d.size());
    std::iota(perm.begin(), perm.end(), std::size_t{ 0 });
    Rng rng{ seed };
    std::shuffle(perm.begin(), perm.end(), rng);
    perm.resize(std::min(n, d.size()));
    std::vector<DataPoint> pts;
    pts.reserve(perm.size());
    for (const std::size_t i : perm) {
        pts.push_back(d[i]);
    }
    return Dataset{ std::move(pts) };
}

double max_feature_norm(const Dataset &d) {
    double best = 0.0;
    for (const DataPoint &z : d.points()) {
        best = std::max(best, z.features.norm());
    }
    return best;
}

Dataset scaled(const Dataset &d, double factor) {
    std::vector<DataPoint> pts = d.points();
    for (DataPoint &z : pts) {
        z.features *= factor;
    }
    return Dataset{ std::move(pts) };
}

Dataset make_biased_gaussian(const SyntheticOptions &opts, std::uint64_t seed) {
    if (opts.n == 0 || opts.dim == 0) {
        throw InvalidArgument("synthetic dataset needs n >= 1 and dim >= 1");
    }
    Rng rng{ seed };
    std::normal_distribution<double> noise{ 0.0, 1.0 };
    std::uniform_real_distribution<double> unif{ 0.0, 1.0 };
    const auto p = static_cast<Eigen::Index>(opts.dim);
    const Eigen::VectorXd direction = Eigen::VectorXd::Constant(p, 1.0 / std::sqrt(static_cast<double>(p)));

    std::vector<DataPoint> pts;
    pts.reserve(opts.n);
    for (std::size_t i = 0; i < opts.n; ++i) {
        DataPoint z;
        z.sensitive = unif(rng) < opts.protected_fraction ? 1 : -1;
        const double pos_rate = z.sensitive > 0 ? opts.positive_rate_protected : opts.positive_rate_unprotected;
        z.label = unif(rng) < pos_rate ? 1 : -1;
        Eigen::VectorXd xi(p);
        for (Eigen::Index k = 0; k < p; ++k) {
            xi(k) = noise(rng);
        }
        xi += (0.5 * opts.separation * z.label + opts.group_shift * (z.sensitive > 0 ? 1.0 : 0.0)) * direction;
        if (opts.sensitive_feature) {
            z.features.resize(p + 1);
            z.features.head(p) = xi;
            z.features(p) = z.sensitive;
        } else {
            z.features = std::move(xi);
        }
        pts.push_back(std::move(z));
    }
    return Dataset{ std::move(pts) };
}

}  // namespace fairauc
