#include "fairauc/plot.hpp"

#include "fairauc/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace fairauc {

AxisRange padded_range(double lo, double hi) {
    double span = hi - lo;
    double pad = span > 0.0 ? 0.05 * span : 0.05 * std::max(std::abs(lo), 1.0);
    return { lo - pad, hi + pad };
}

namespace {

std::string num(double x, const char *f = "%.2f") {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

std::string escape(const std::string &s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

// Ticks at multiples of a 1/2/5 step inside [lo, hi].
std::vector<double> ticks(double lo, double hi) {
    double raw = (hi - lo) / 5.0;
    double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : { 1.0, 2.0, 5.0, 10.0 }) {
        step = m * mag;
        if (step >= raw) break;
    }
    std::vector<double> out;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-12 * step; t += step) out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
    return out;
}

const char *kPalette[] = { "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b" };

}  // namespace

std::string emit_plot(const std::vector<FrontierPoint> &points, const PlotOptions &opts) {
    if (points.empty()) throw InvalidArgument("emit_plot: no points");
    double xlo = points[0].gap_mean, xhi = xlo, ylo = points[0].auc_mean, yhi = ylo;
    for (const auto &p : points) {
        xlo = std::min(xlo, p.gap_mean - p.gap_se);
        xhi = std::max(xhi, p.gap_mean + p.gap_se);
        ylo = std::min(ylo, p.auc_mean - p.auc_se);
        yhi = std::max(yhi, p.auc_mean + p.auc_se);
    }
    auto xr = padded_range(xlo, xhi), yr = padded_range(ylo, yhi);

    const double left = 70, right = 130, top = 40, bottom = 55;
    const double pw = opts.width - left - right, ph = opts.height - top - bottom;
    auto X = [&](double v) { return left + (v - xr.lo) / (xr.hi - xr.lo) * pw; };
    auto Y = [&](double v) { return top + (yr.hi - v) / (yr.hi - yr.lo) * ph; };

    std::vector<std::string> series;
    for (const auto &p : points)
        if (std::find(series.begin(), series.end(), p.method) == series.end()) series.push_back(p.method);
    auto colour = [&](const std::string &m) {
        auto k = static_cast<std::size_t>(std::find(series.begin(), series.end(), m) - series.begin());
        return kPalette[k % std::size(kPalette)];
    };

    std::ostringstream o;
    o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(opts.width) << "\" height=\"" << num(opts.height) << "\" viewBox=\"0 0 " << num(opts.width) << ' '
      << num(opts.height) << "\" data-xmin=\"" << num(xr.lo, "%.17g") << "\" data-xmax=\"" << num(xr.hi, "%.17g") << "\" data-ymin=\"" << num(yr.lo, "%.17g")
      << "\" data-ymax=\"" << num(yr.hi, "%.17g") << "\">\n";
    o << "<rect x=\"0\" y=\"0\" width=\"" << num(opts.width) << "\" height=\"" << num(opts.height) << "\" fill=\"white\"/>\n";
    o << "<text x=\"" << num(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(opts.title) << "</text>\n";

    o << "<g class=\"axes\" stroke=\"black\" stroke-width=\"1\">\n";
    o << "<line x1=\"" << num(left) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(left + pw) << "\" y2=\"" << num(top + ph) << "\"/>\n";
    o << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left) << "\" y2=\"" << num(top + ph) << "\"/>\n";
    for (double t : ticks(xr.lo, xr.hi))
        o << "<line x1=\"" << num(X(t)) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(X(t)) << "\" y2=\"" << num(top + ph + 5) << "\"/>\n";
    for (double t : ticks(yr.lo, yr.hi)) o << "<line x1=\"" << num(left - 5) << "\" y1=\"" << num(Y(t)) << "\" x2=\"" << num(left) << "\" y2=\"" << num(Y(t)) << "\"/>\n";
    o << "</g>\n";

    o << "<g class=\"tick-labels\" font-size=\"11\">\n";
    for (double t : ticks(xr.lo, xr.hi))
        o << "<text x=\"" << num(X(t)) << "\" y=\"" << num(top + ph + 18) << "\" text-anchor=\"middle\">" << num(t, "%.4g") << "</text>\n";
    for (double t : ticks(yr.lo, yr.hi))
        o << "<text x=\"" << num(left - 8) << "\" y=\"" << num(Y(t) + 4) << "\" text-anchor=\"end\">" << num(t, "%.4g") << "</text>\n";
    o << "</g>\n";
    o << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(opts.height - 12) << "\" text-anchor=\"middle\" font-size=\"13\">" << escape(opts.x_label) << "</text>\n";
    o << "<text x=\"16\" y=\"" << num(top + ph / 2) << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 " << num(top + ph / 2) << ")\">"
      << escape(opts.y_label) << "</text>\n";

    for (const auto &m : series) {
        o << "<g class=\"series\" data-method=\"" << escape(m) << "\" fill=\"" << colour(m) << "\" stroke=\"" << colour(m) << "\">\n";
        for (const auto &p : points) {
            if (p.method != m) continue;
            double cx = X(p.gap_mean), cy = Y(p.auc_mean);
            if (p.gap_se > 0.0)
                o << "<line class=\"errorbar\" x1=\"" << num(X(p.gap_mean - p.gap_se)) << "\" y1=\"" << num(cy) << "\" x2=\"" << num(X(p.gap_mean + p.gap_se)) << "\" y2=\""
                  << num(cy) << "\"/>\n";
            if (p.auc_se > 0.0)
                o << "<line class=\"errorbar\" x1=\"" << num(cx) << "\" y1=\"" << num(Y(p.auc_mean - p.auc_se)) << "\" x2=\"" << num(cx) << "\" y2=\""
                  << num(Y(p.auc_mean + p.auc_se)) << "\"/>\n";
            o << "<circle class=\"marker\" cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"4\" data-gap=\"" << num(p.gap_mean, "%.17g") << "\" data-auc=\""
              << num(p.auc_mean, "%.17g") << "\"><title>kappa=" << num(p.kappa, "%g") << "</title></circle>\n";
        }
        o << "</g>\n";
    }

    o << "<g class=\"legend\" font-size=\"12\">\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        double y = top + 10 + 18.0 * static_cast<double>(k);
        o << "<rect x=\"" << num(left + pw + 15) << "\" y=\"" << num(y - 8) << "\" width=\"10\" height=\"10\" fill=\"" << colour(series[k]) << "\"/>\n";
        o << "<text x=\"" << num(left + pw + 30) << "\" y=\"" << num(y + 1) << "\">" << escape(series[k]) << "</text>\n";
    }
    o << "</g>\n</svg>\n";
    return o.str();
}

}  // namespace fairauc
