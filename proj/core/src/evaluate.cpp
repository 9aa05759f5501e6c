#include "fcdcast/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "fcdcast/errors.hpp"

namespace fcd::eval {

namespace {

constexpr double kMapeFloor = 1e-6;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

void PredictionSet::check() const {
    if (n_samples == 0) throw ValidationError("empty prediction set");
    if (edges == 0 || horizon == 0) throw ValidationError("prediction set needs edges and horizon > 0");
    const std::size_t n = entries();
    if (predicted.size() != n || truth.size() != n) throw ValidationError("prediction and truth sizes disagree");
    if (anchor_speed.size() != n_samples * edges) throw ValidationError("anchor speeds must be [n, edges]");
    if (!free_flow.empty() && free_flow.size() != n_samples * edges) {
        throw ValidationError("free-flow speeds must be [n, edges]");
    }
    const auto finite = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    if (!finite(predicted) || !finite(truth) || !finite(anchor_speed) || !finite(free_flow)) {
        throw ValidationError("prediction set has non-finite entries");
    }
}

PredictionSet PredictionSet::subset(std::span<const std::size_t> samples) const {
    PredictionSet out;
    out.n_samples = samples.size();
    out.edges = edges;
    out.horizon = horizon;
    const std::size_t w = edges * horizon;
    for (std::size_t i : samples) {
        if (i >= n_samples) throw ValidationError("subset index out of range");
        out.predicted.insert(out.predicted.end(), predicted.begin() + i * w, predicted.begin() + (i + 1) * w);
        out.truth.insert(out.truth.end(), truth.begin() + i * w, truth.begin() + (i + 1) * w);
        out.anchor_speed.insert(out.anchor_speed.end(), anchor_speed.begin() + i * edges,
                                anchor_speed.begin() + (i + 1) * edges);
        if (!free_flow.empty()) {
            out.free_flow.insert(out.free_flow.end(), free_flow.begin() + i * edges,
                                 free_flow.begin() + (i + 1) * edges);
        }
    }
    return out;
}

PredictionSet PredictionSet::with_predictions(std::vector<double> p) const {
    PredictionSet out = *this;
    out.predicted = std::move(p);
    return out;
}

HorizonValues rmse(const PredictionSet& set) {
    set.check();
    HorizonValues out;
    out.per_horizon.assign(set.horizon, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < set.n_samples; ++i) {
        for (std::size_t l = 0; l < set.edges; ++l) {
            const std::size_t row = i * set.edges + l;
            const double scale = set.free_flow.empty() ? 1.0 : set.free_flow[row];
            for (std::size_t h = 0; h < set.horizon; ++h) {
                const std::size_t k = row * set.horizon + h;
                const double e = (set.predicted[k] - set.truth[k]) * scale;
                out.per_horizon[h] += e * e;
                total += e * e;
            }
        }
    }
    const double per_h = static_cast<double>(set.n_samples * set.edges);
    for (double& v : out.per_horizon) v = std::sqrt(v / per_h);
    out.aggregate = std::sqrt(total / static_cast<double>(set.entries()));
    return out;
}

std::vector<double> rtpb_predict(const PredictionSet& set) {
    std::vector<double> out(set.entries());
    for (std::size_t row = 0; row < set.n_samples * set.edges; ++row) {
        std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(row * set.horizon), set.horizon, set.anchor_speed.at(row));
    }
    return out;
}

std::optional<double> q_score(double rmse_model, double rmse_bench) {
    if (!(rmse_bench > 0.0)) return std::nullopt;
    return 1.0 - (rmse_model * rmse_model) / (rmse_bench * rmse_bench);
}

MapeValues mape(const PredictionSet& set) {
    set.check();
    MapeValues out;
    out.per_horizon.assign(set.horizon, 0.0);
    std::vector<std::size_t> counts(set.horizon, 0);
    double total = 0.0;
    std::size_t total_count = 0;
    for (std::size_t k = 0; k < set.entries(); ++k) {
        const std::size_t h = k % set.horizon;
        if (std::abs(set.truth[k]) < kMapeFloor) {
            ++out.excluded;
            continue;
        }
        const double a = std::abs(1.0 - set.predicted[k] / set.truth[k]);
        out.per_horizon[h] += a;
        ++counts[h];
        total += a;
        ++total_count;
    }
    for (std::size_t h = 0; h < set.horizon; ++h) {
        out.per_horizon[h] = counts[h] == 0 ? 0.0 : 100.0 * out.per_horizon[h] / static_cast<double>(counts[h]);
    }
    out.aggregate = total_count == 0 ? 0.0 : 100.0 * total / static_cast<double>(total_count);
    return out;
}

std::string to_string(Regime regime) {
    switch (regime) {
        case Regime::constant: return "constant";
        case Regime::changing: return "changing";
        case Regime::standard: return "standard";
    }
    return "?";
}

RegimeSplit regime_split(std::span<const double> variation) {
    const std::size_t n = variation.size();
    if (n < 10) throw ValidationError("regime split needs at least 10 samples");
    RegimeSplit out;
    out.variation.assign(variation.begin(), variation.end());
    out.labels.assign(n, Regime::standard);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return variation[a] < variation[b]; });
    const auto k = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(n)));
    for (std::size_t i = 0; i < k; ++i) {
        out.labels[order[i]] = Regime::constant;
        out.labels[order[n - 1 - i]] = Regime::changing;
    }
    return out;
}

double regime_variation(const data::SpeedPanel& panel, const features::FeatureSpec& spec, features::Anchor anchor) {
    const std::size_t lo = anchor.slot - spec.lookback();
    const std::size_t hi = anchor.slot + spec.horizon();
    std::vector<double> values;
    for (std::size_t l = 0; l < spec.target_edges(); ++l) {
        const std::size_t e = panel.ring_edge(anchor.edge, l);
        for (std::size_t s = lo; s < hi; ++s) values.push_back(panel.value(e, s));
    }
    // Two passes: constant windows must come out exactly 0.
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    return std::sqrt(var / n);
}

const RegimeReport& EvalReport::regime(const std::string& name) const {
    for (const auto& r : regimes) {
        if (r.regime == name) return r;
    }
    throw ValidationError("report has no regime '" + name + "'");
}

std::string EvalReport::to_csv() const {
    std::ostringstream out;
    out << "horizon,rmse_kph,rmse_bench_kph,q2,mape,regime\n";
    const auto q = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string("undefined"); };
    for (const auto& r : regimes) {
        for (std::size_t h = 0; h < r.rmse.per_horizon.size(); ++h) {
            out << h << ',' << fmt(r.rmse.per_horizon[h]) << ',' << fmt(r.rmse_bench.per_horizon[h]) << ','
                << q(r.q2[h]) << ',' << fmt(r.mape.per_horizon[h]) << ',' << r.regime << '\n';
        }
        out << "all," << fmt(r.rmse.aggregate) << ',' << fmt(r.rmse_bench.aggregate) << ',' << q(r.q2_aggregate)
            << ',' << fmt(r.mape.aggregate) << ',' << r.regime << '\n';
    }
    return out.str();
}

namespace {

struct Series {
    std::string label;
    std::string colour;
    bool dashed = false;
    std::vector<std::optional<double>> y;
};

void plot(std::ostringstream& svg, double x0, double y0, double w, double h, const std::string& title,
          const std::vector<Series>& series) {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t n = 0;
    for (const auto& s : series) {
        n = std::max(n, s.y.size());
        for (const auto& v : s.y) {
            if (!v) continue;
            lo = std::min(lo, *v);
            hi = std::max(hi, *v);
        }
    }
    if (hi <= lo) hi = lo + 1.0;
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    const auto px = [&](std::size_t i) { return x0 + (n <= 1 ? 0.0 : w * static_cast<double>(i) / static_cast<double>(n - 1)); };
    const auto py = [&](double v) { return y0 + h - h * (v - lo) / (hi - lo); };

    svg << "<text x=\"" << x0 + w / 2 << "\" y=\"" << y0 - 12 << "\" text-anchor=\"middle\" font-size=\"14\">"
        << title << "</text>\n";
    svg << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << w << "\" height=\"" << h
        << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double v = lo + (hi - lo) * t / 4.0;
        svg << "<line x1=\"" << x0 << "\" x2=\"" << x0 + w << "\" y1=\"" << py(v) << "\" y2=\"" << py(v)
            << "\" stroke=\"#ddd\"/>\n";
        svg << "<text x=\"" << x0 - 6 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\" font-size=\"10\">"
            << fmt(std::round(v * 1000.0) / 1000.0) << "</text>\n";
    }
    if (lo < 0.0 && hi > 0.0) {
        svg << "<line x1=\"" << x0 << "\" x2=\"" << x0 + w << "\" y1=\"" << py(0.0) << "\" y2=\"" << py(0.0)
            << "\" stroke=\"#888\"/>\n";
    }
    for (std::size_t i = 0; i < n; i += std::max<std::size_t>(1, n / 10)) {
        svg << "<text x=\"" << px(i) << "\" y=\"" << y0 + h + 14 << "\" text-anchor=\"middle\" font-size=\"10\">" << i
            << "</text>\n";
    }
    svg << "<text x=\"" << x0 + w / 2 << "\" y=\"" << y0 + h + 30
        << "\" text-anchor=\"middle\" font-size=\"11\">horizon (slots)</text>\n";
    double ly = y0 + 12;
    for (const auto& s : series) {
        std::string points;
        for (std::size_t i = 0; i < s.y.size(); ++i) {
            if (!s.y[i]) continue;
            points += fmt(px(i)) + "," + fmt(py(*s.y[i])) + " ";
        }
        svg << "<polyline fill=\"none\" stroke=\"" << s.colour << "\" stroke-width=\"1.5\""
            << (s.dashed ? " stroke-dasharray=\"4 3\"" : "") << " points=\"" << points << "\"/>\n";
        svg << "<text x=\"" << x0 + w + 8 << "\" y=\"" << ly << "\" font-size=\"10\" fill=\"" << s.colour << "\">"
            << s.label << "</text>\n";
        ly += 14;
    }
}

}  // namespace

std::string EvalReport::to_svg(const std::string& title) const {
    static const char* colours[] = {"#1f77b4", "#2ca02c", "#d62728", "#9467bd"};
    std::vector<Series> rmse_series;
    std::vector<Series> q_series;
    for (std::size_t r = 0; r < regimes.size(); ++r) {
        const auto& rep = regimes[r];
        const std::string colour = colours[r % 4];
        Series model{rep.regime + " model", colour, false, {}};
        Series bench{rep.regime + " RTPB", colour, true, {}};
        for (double v : rep.rmse.per_horizon) model.y.emplace_back(v);
        for (double v : rep.rmse_bench.per_horizon) bench.y.emplace_back(v);
        rmse_series.push_back(std::move(model));
        rmse_series.push_back(std::move(bench));
        q_series.push_back({rep.regime, colour, false, rep.q2});
    }
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"1040\" height=\"400\" font-family=\"sans-serif\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!title.empty()) svg << "<text x=\"520\" y=\"20\" text-anchor=\"middle\" font-size=\"16\">" << title << "</text>\n";
    plot(svg, 60, 60, 360, 280, "RMSE (" + units + ")", rmse_series);
    plot(svg, 580, 60, 300, 280, "Q2", q_series);
    svg << "</svg>\n";
    return svg.str();
}

RegimeReport summarize(const PredictionSet& set, const std::string& name) {
    RegimeReport r;
    r.regime = name;
    r.n_samples = set.n_samples;
    r.rmse = rmse(set);
    r.rmse_bench = rmse(set.with_predictions(rtpb_predict(set)));
    for (std::size_t h = 0; h < set.horizon; ++h) r.q2.push_back(q_score(r.rmse.per_horizon[h], r.rmse_bench.per_horizon[h]));
    r.q2_aggregate = q_score(r.rmse.aggregate, r.rmse_bench.aggregate);
    r.mape = mape(set);
    return r;
}

EvalReport evaluate(const PredictionSet& set, std::optional<std::vector<double>> variation) {
    EvalReport report;
    report.units = set.free_flow.empty() ? "normalized" : "kph";
    report.regimes.push_back(summarize(set, "all"));
    if (variation) {
        if (variation->size() != set.n_samples) throw ValidationError("one variation value per sample expected");
        const auto split = regime_split(*variation);
        for (Regime g : {Regime::constant, Regime::changing, Regime::standard}) {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < split.labels.size(); ++i) {
                if (split.labels[i] == g) members.push_back(i);
            }
            if (!members.empty()) report.regimes.push_back(summarize(set.subset(members), to_string(g)));
        }
    }
    return report;
}

PredictionSet make_prediction_set(const training::Dataset& data, const nn::Tensor& predicted, bool in_kph) {
    const auto& spec = data.spec();
    const auto& panel = data.panel();
    PredictionSet set;
    set.n_samples = data.size();
    set.edges = spec.target_edges();
    set.horizon = spec.horizon();
    if (predicted.size() != set.entries()) throw ValidationError("prediction tensor does not match the dataset");
    set.predicted.assign(predicted.data(), predicted.data() + predicted.size());
    const nn::Tensor truth = data.flat_targets(training::iota_index(data.size()));
    set.truth.assign(truth.data(), truth.data() + truth.size());
    for (const auto& a : data.anchors()) {
        for (std::size_t l = 0; l < set.edges; ++l) {
            const std::size_t e = panel.ring_edge(a.edge, l);
            set.anchor_speed.push_back(panel.value(e, a.slot - 1));
            if (in_kph) set.free_flow.push_back(panel.free_flow()[e]);
        }
    }
    return set;
}

EvalReport evaluate_model(nn::Sequential& model, const training::Dataset& test, EvalOptions options) {
    if (test.empty()) throw ValidationError("empty test set");
    const nn::Tensor pred = training::predict_all(model, test, options.batch);
    const PredictionSet set = make_prediction_set(test, pred, options.in_kph);
    if (!options.regimes) return evaluate(set);
    std::vector<double> variation;
    variation.reserve(test.size());
    for (const auto& a : test.anchors()) variation.push_back(regime_variation(test.panel(), test.spec(), a));
    return evaluate(set, std::move(variation));
}

}  // namespace fcd::eval
