#include "simplab/report.hpp"

#include "simplab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

namespace simplab {

namespace {

std::string fixed3(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", x);
    return buf;
}

struct Series {
    const char* name;
    const char* color;
    double ProfileStep::*field;
};

constexpr Series kSeries[] = {
    {"cum_s", "#1f77b4", &ProfileStep::cum_s},
    {"cum_delta", "#d62728", &ProfileStep::cum_delta},
    {"cum_lambda", "#2ca02c", &ProfileStep::cum_lambda},
};

struct Bound {
    const char* name;
    const char* color;
    double ProfileBounds::*field;
};

constexpr Bound kBounds[] = {
    {"bound_pred", "#1f77b4", &ProfileBounds::prediction},
    {"bound_over", "#d62728", &ProfileBounds::overgen},
    {"bound_under", "#2ca02c", &ProfileBounds::undergen},
};

} // namespace

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

nlohmann::ordered_json json_number(double x) {
    if (!std::isfinite(x)) return format_number(x);
    return std::stod(format_number(x));
}

std::string to_string(ProfileMode m) { return m == ProfileMode::Exact ? "exact" : "monte-carlo"; }

std::string profile_csv(const ConvergenceProfile& p) {
    std::string out = "n,s_n,cum_s,delta_n,cum_delta,lambda_n,cum_lambda,bound_pred,bound_over,bound_under\n";
    for (const auto& s : p.steps) {
        out += std::to_string(s.n);
        for (double v : {s.s, s.cum_s, s.delta, s.cum_delta, s.lambda, s.cum_lambda, p.bounds.prediction,
                         p.bounds.overgen, p.bounds.undergen})
            out += "," + format_number(v);
        out += "\n";
    }
    return out;
}

nlohmann::ordered_json profile_json(const ConvergenceProfile& p) {
    nlohmann::ordered_json j;
    j["mode"] = to_string(p.mode);
    if (p.mode == ProfileMode::MonteCarlo) j["trials"] = p.trials;
    j["seed"] = p.seed;
    j["f"] = json_number(p.f);
    j["reference_symbol"] = p.reference_symbol;
    j["truth_in_class"] = p.truth_in_class;
    j["bounds"] = {{"truth_bits", json_number(p.bounds.truth_bits)},
                   {"bound_pred", json_number(p.bounds.prediction)},
                   {"bound_over", json_number(p.bounds.overgen)},
                   {"bound_under", json_number(p.bounds.undergen)}};
    auto steps = nlohmann::ordered_json::array();
    for (const auto& s : p.steps) {
        nlohmann::ordered_json r;
        r["n"] = s.n;
        r["s_n"] = json_number(s.s);
        r["cum_s"] = json_number(s.cum_s);
        r["tv2_n"] = json_number(s.tv2);
        r["delta_n"] = json_number(s.delta);
        r["cum_delta"] = json_number(s.cum_delta);
        r["lambda_n"] = json_number(s.lambda);
        r["cum_lambda"] = json_number(s.cum_lambda);
        if (p.mode == ProfileMode::MonteCarlo) {
            r["s_n_ci95"] = json_number(s.s_ci);
            r["tv2_n_ci95"] = json_number(s.tv2_ci);
            r["delta_n_ci95"] = json_number(s.delta_ci);
            r["lambda_n_ci95"] = json_number(s.lambda_ci);
        }
        steps.push_back(std::move(r));
    }
    j["steps"] = std::move(steps);
    return j;
}

std::string profile_svg(const ConvergenceProfile& p) {
    if (p.steps.empty()) throw ParameterError("cannot plot an empty profile");
    constexpr double width = 640, height = 400, left = 60, right = 150, top = 20, bottom = 40;
    const double pw = width - left - right, ph = height - top - bottom;

    double ymax = 0.0;
    for (const auto& s : p.steps)
        for (const auto& series : kSeries) ymax = std::max(ymax, s.*(series.field));
    for (const auto& b : kBounds)
        if (std::isfinite(p.bounds.*(b.field))) ymax = std::max(ymax, p.bounds.*(b.field));
    if (ymax <= 0.0) ymax = 1.0;
    ymax *= 1.05;
    const double nmax = static_cast<double>(std::max<std::size_t>(p.steps.back().n, 2));
    auto x_of = [&](double n) { return left + pw * (n - 1.0) / (nmax - 1.0); };
    auto y_of = [&](double v) { return top + ph * (1.0 - v / ymax); };

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
    svg += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"400\" fill=\"white\"/>\n";
    svg += "<line x1=\"" + fixed3(left) + "\" y1=\"" + fixed3(top + ph) + "\" x2=\"" + fixed3(left + pw) + "\" y2=\"" +
           fixed3(top + ph) + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + fixed3(left) + "\" y1=\"" + fixed3(top) + "\" x2=\"" + fixed3(left) + "\" y2=\"" +
           fixed3(top + ph) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + fixed3(left + pw / 2) + "\" y=\"" + fixed3(height - 8) +
           "\" font-size=\"12\" text-anchor=\"middle\">n</text>\n";
    svg += "<text x=\"" + fixed3(left - 6) + "\" y=\"" + fixed3(top + 4) + "\" font-size=\"10\" text-anchor=\"end\">" +
           format_number(ymax) + "</text>\n";
    svg += "<text x=\"" + fixed3(left - 6) + "\" y=\"" + fixed3(top + ph) +
           "\" font-size=\"10\" text-anchor=\"end\">0</text>\n";

    for (const auto& b : kBounds) {
        const double v = p.bounds.*(b.field);
        if (!std::isfinite(v)) continue;
        const double y = y_of(v);
        svg += "<line data-bound=\"" + std::string(b.name) + "\" data-value=\"" + format_number(v) + "\" x1=\"" +
               fixed3(left) + "\" y1=\"" + fixed3(y) + "\" x2=\"" + fixed3(left + pw) + "\" y2=\"" + fixed3(y) +
               "\" stroke=\"" + b.color + "\" stroke-dasharray=\"6 4\"/>\n";
        svg += "<text x=\"" + fixed3(left + pw + 4) + "\" y=\"" + fixed3(y + 4) + "\" font-size=\"10\" fill=\"" +
               b.color + "\">" + b.name + "</text>\n";
    }
    int row = 0;
    for (const auto& series : kSeries) {
        std::string pts;
        for (const auto& s : p.steps) {
            if (!pts.empty()) pts += ' ';
            pts += fixed3(x_of(static_cast<double>(s.n))) + "," + fixed3(y_of(s.*(series.field)));
        }
        svg += "<polyline data-series=\"" + std::string(series.name) + "\" fill=\"none\" stroke=\"" + series.color +
               "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
        svg += "<text x=\"" + fixed3(left + pw + 4) + "\" y=\"" + fixed3(height - bottom - 40 + 14 * row++) +
               "\" font-size=\"10\" fill=\"" + series.color + "\">" + series.name + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

void write_profile_svg(const ConvergenceProfile& p, const std::string& path) {
    const auto svg = profile_svg(p);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write plot '" + path + "'");
    out << svg;
    if (!out) throw Error("failed writing plot '" + path + "'");
}

} // namespace simplab
