#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fcdcast/adam.hpp"
#include "fcdcast/dataset.hpp"
#include "fcdcast/loss.hpp"
#include "fcdcast/models.hpp"
#include "fcdcast/panel.hpp"

namespace fcd::training {

struct TrainConfig {
    std::size_t t_mb = 50;
    /// Mini-batch iterations; each one is an "epoch" for the decay schedule.
    std::size_t max_epochs = 5000;
    double eta0 = 1e-3;
    double alpha0 = 0.0;
    double lambda_l1 = 1e-4;
    double lambda_l2 = 1e-4;
    bool bias_correction = false;
    /// Validation checks without improvement before stopping.
    std::size_t patience = 20;
    /// Iterations between validation checks.
    std::size_t val_every = 100;
    /// Trailing share of the training days held out for validation.
    double val_fraction = 0.1;
    std::uint64_t rng_seed = 0;
    /// Before every validation check (and before returning) the batch-norm
    /// running statistics restart and are re-accumulated over this many
    /// training mini-batches with the current weights. 0 keeps the running
    /// averages of the whole run.
    std::size_t bn_refresh_batches = 50;
    /// Where to dump the offending batch if the loss diverges (empty: no dump).
    std::filesystem::path divergence_dump;

    void check() const;
};

/// Parses the JSON form (same keys as the fields; missing keys keep defaults).
TrainConfig train_config_from_json(const std::string& text);
std::string to_json_string(const TrainConfig& cfg);

enum class StopReason { max_epochs, early_stopping };
std::string to_string(StopReason reason);

struct LogRow {
    std::size_t iter = 0;
    double train_loss = 0.0;
    /// NaN between validation checks.
    double val_rmse = std::numeric_limits<double>::quiet_NaN();
    double eta = 0.0;
};

struct TrainLog {
    std::vector<LogRow> rows;
    /// Iteration whose parameters were returned (0 when nothing was checked).
    std::size_t best_iter = 0;
    double best_val_rmse = std::numeric_limits<double>::infinity();
    StopReason stop = StopReason::max_epochs;

    /// CSV `iter,train_loss,val_rmse,eta`; val_rmse is empty between checks.
    std::string to_csv() const;
};

struct TrainResult {
    nn::Sequential model;
    TrainLog log;
};

/// Thrown when the loss becomes non-finite; the batch anchors and the
/// parameters before the failing step are dumped first when configured.
class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Chronological split of a slot range on day boundaries: the last
/// round(val_fraction * days) days (at least one) become validation.
struct TrainValidationRanges {
    data::SlotRange train;
    data::SlotRange validation;
};
TrainValidationRanges split_validation(data::SlotRange range, std::size_t slots_per_day, double val_fraction);

/// Train, validation and test anchors of one panel. Test targets lie after
/// the chronological split, validation targets in the last val_fraction of
/// the training days; inputs may read earlier history.
struct SplitDatasets {
    Dataset train;
    Dataset validation;
    Dataset test;
};
SplitDatasets make_split_datasets(const data::SpeedPanel& panel, const features::FeatureSpec& spec,
                                  models::Layout layout, double train_fraction, double val_fraction,
                                  std::size_t stride);

/// RMSE of the model's inference predictions (normalized units, or kph
/// using each target edge's free-flow speed). Throws on an empty set.
double validate(nn::Sequential& model, const Dataset& samples, bool in_kph = false);

/// Mini-batch Adam on J + elastic net with early stopping on validation
/// RMSE (normalized). Returns the best-validation parameters; with an empty
/// validation set the final parameters are returned.
TrainResult train(nn::Sequential model, const Dataset& train_set, const Dataset& val_set, const TrainConfig& cfg);

struct GridCandidate {
    models::ModelSpec model;
    TrainConfig train;
};

struct GridResult {
    std::size_t index = 0;
    double val_rmse = 0.0;
};

/// Trains every candidate (initialized from its own seed) and ranks by
/// validation RMSE; ties keep candidate order.
std::vector<GridResult> grid_search(const std::vector<GridCandidate>& candidates, const Dataset& train_set,
                                    const Dataset& val_set);

/// Deterministic Fisher-Yates shuffle independent of the standard library's
/// distribution implementations.
void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng);

}  // namespace fcd::training
