#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fcdcast/dataset.hpp"

namespace fcd::eval {

/// Predictions against ground truth for n samples, each covering `edges`
/// edges over `horizon` future slots. Entry (i, l, h) sits at
/// (i * edges + l) * horizon + h. Speeds are normalized.
struct PredictionSet {
    std::size_t n_samples = 0;
    std::size_t edges = 1;
    std::size_t horizon = 20;
    std::vector<double> predicted;
    std::vector<double> truth;
    /// Last observed speed before the anchor, [n, edges].
    std::vector<double> anchor_speed;
    /// Free-flow speed (kph) per (sample, edge); empty means report in
    /// normalized units.
    std::vector<double> free_flow;

    /// Throws ValidationError on inconsistent sizes or non-finite entries.
    void check() const;
    std::size_t entries() const noexcept { return n_samples * edges * horizon; }
    /// Copy restricted to the given samples.
    PredictionSet subset(std::span<const std::size_t> samples) const;
    /// Copy with `predicted` replaced.
    PredictionSet with_predictions(std::vector<double> predicted) const;
};

struct HorizonValues {
    std::vector<double> per_horizon;
    double aggregate = 0.0;
};

/// sqrt(mean squared error) per horizon and over everything; errors are
/// scaled by each edge's free-flow speed when the set carries one.
HorizonValues rmse(const PredictionSet& set);

/// The real-time propagation benchmark: every future slot takes the last
/// observed speed.
std::vector<double> rtpb_predict(const PredictionSet& set);

/// 1 - rmse^2 / rmse_bench^2; nullopt when rmse_bench is 0.
std::optional<double> q_score(double rmse, double rmse_bench);

struct MapeValues {
    std::vector<double> per_horizon;
    double aggregate = 0.0;
    /// Entries skipped because |truth| < 1e-6.
    std::size_t excluded = 0;
};

/// 100 * mean |1 - predicted / truth| in percent.
MapeValues mape(const PredictionSet& set);

enum class Regime { constant, changing, standard };
std::string to_string(Regime regime);

struct RegimeSplit {
    std::vector<Regime> labels;
    std::vector<double> variation;
};

/// The round(n / 10) least varying samples are constant, the round(n / 10)
/// most varying are changing, the rest standard. Ties go by sample order.
/// Needs at least 10 samples.
RegimeSplit regime_split(std::span<const double> variation);

/// Standard deviation of the ground truth over the lookback and target
/// slots of every target edge, [T - lookback, T + H - 1].
double regime_variation(const data::SpeedPanel& panel, const features::FeatureSpec& spec, features::Anchor anchor);

struct RegimeReport {
    std::string regime;
    std::size_t n_samples = 0;
    HorizonValues rmse;
    HorizonValues rmse_bench;
    std::vector<std::optional<double>> q2;
    std::optional<double> q2_aggregate;
    MapeValues mape;
};

struct EvalReport {
    std::string units;
    /// "all" first, then constant, changing, standard when requested.
    std::vector<RegimeReport> regimes;

    const RegimeReport& regime(const std::string& name) const;
    /// `horizon,rmse_kph,rmse_bench_kph,q2,mape,regime`, one row per horizon
    /// and an aggregate row with horizon "all". Undefined Q2 prints as
    /// "undefined".
    std::string to_csv() const;
    /// RMSE and Q2 against horizon, one series per regime.
    std::string to_svg(const std::string& title = "") const;
};

RegimeReport summarize(const PredictionSet& set, const std::string& name);

/// Report for a prediction set; with `variation` the regime breakdown is
/// added.
EvalReport evaluate(const PredictionSet& set, std::optional<std::vector<double>> variation = std::nullopt);

/// Ground truth, anchors and free-flow speeds for the dataset, with the
/// given predictions ([n, edges * H]).
PredictionSet make_prediction_set(const training::Dataset& data, const nn::Tensor& predicted, bool in_kph = true);

struct EvalOptions {
    bool regimes = true;
    bool in_kph = true;
    std::size_t batch = 256;
};

/// Runs inference (autoregressive for sequence models) and reports.
EvalReport evaluate_model(nn::Sequential& model, const training::Dataset& test, EvalOptions options = {});

}  // namespace fcd::eval
