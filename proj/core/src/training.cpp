#include "fcdcast/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fcdcast/batch_norm.hpp"
#include "fcdcast/binary_io.hpp"
#include "fcdcast/checkpoint.hpp"
#include "fcdcast/errors.hpp"
#include "fcdcast/evaluate.hpp"

namespace fcd::training {

using nlohmann::json;

void TrainConfig::check() const {
    if (t_mb < 2) throw ValidationError("t_mb must be at least 2 (batch normalization)");
    if (max_epochs == 0) throw ValidationError("max_epochs must be positive");
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ValidationError("val_fraction must lie in (0, 1)");
    if (!(eta0 > 0.0)) throw ValidationError("eta0 must be positive");
    if (lambda_l1 < 0.0 || lambda_l2 < 0.0) throw ValidationError("regularization weights must be non-negative");
    if (val_every == 0) throw ValidationError("val_every must be positive");
}

TrainConfig train_config_from_json(const std::string& text) {
    TrainConfig c;
    try {
        const json j = json::parse(text);
        if (!j.is_object()) throw ValidationError("train config must be a JSON object");
        for (const auto& [key, value] : j.items()) {
            if (key == "t_mb") c.t_mb = value.get<std::size_t>();
            else if (key == "max_epochs") c.max_epochs = value.get<std::size_t>();
            else if (key == "eta0") c.eta0 = value.get<double>();
            else if (key == "alpha0") c.alpha0 = value.get<double>();
            else if (key == "lambda_l1") c.lambda_l1 = value.get<double>();
            else if (key == "lambda_l2") c.lambda_l2 = value.get<double>();
            else if (key == "bias_correction") c.bias_correction = value.get<bool>();
            else if (key == "patience") c.patience = value.get<std::size_t>();
            else if (key == "val_every") c.val_every = value.get<std::size_t>();
            else if (key == "val_fraction") c.val_fraction = value.get<double>();
            else if (key == "rng_seed") c.rng_seed = value.get<std::uint64_t>();
            else if (key == "bn_refresh_batches") c.bn_refresh_batches = value.get<std::size_t>();
            else throw ValidationError("train config: unknown key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("train config: ") + e.what());
    }
    c.check();
    return c;
}

std::string to_json_string(const TrainConfig& c) {
    const json j = {{"t_mb", c.t_mb},
                    {"max_epochs", c.max_epochs},
                    {"eta0", c.eta0},
                    {"alpha0", c.alpha0},
                    {"lambda_l1", c.lambda_l1},
                    {"lambda_l2", c.lambda_l2},
                    {"bias_correction", c.bias_correction},
                    {"patience", c.patience},
                    {"val_every", c.val_every},
                    {"val_fraction", c.val_fraction},
                    {"rng_seed", c.rng_seed},
                    {"bn_refresh_batches", c.bn_refresh_batches}};
    return j.dump();
}

std::string to_string(StopReason reason) {
    return reason == StopReason::early_stopping ? "early_stopping" : "max_epochs";
}

std::string TrainLog::to_csv() const {
    std::ostringstream out;
    out << "iter,train_loss,val_rmse,eta\n";
    char buf[96];
    for (const auto& r : rows) {
        out << r.iter << ',';
        std::snprintf(buf, sizeof buf, "%.17g", r.train_loss);
        out << buf << ',';
        if (!std::isnan(r.val_rmse)) {
            std::snprintf(buf, sizeof buf, "%.17g", r.val_rmse);
            out << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g", r.eta);
        out << ',' << buf << '\n';
    }
    return out.str();
}

TrainValidationRanges split_validation(data::SlotRange range, std::size_t slots_per_day, double val_fraction) {
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ValidationError("val_fraction must lie in (0, 1)");
    const std::size_t days = range.size() / slots_per_day;
    if (days < 2) throw ValidationError("need at least two training days to hold out validation");
    auto held = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(days)));
    held = std::clamp<std::size_t>(held, 1, days - 1);
    const std::size_t boundary = range.begin + (days - held) * slots_per_day;
    return {{range.begin, boundary}, {boundary, range.end}};
}

SplitDatasets make_split_datasets(const data::SpeedPanel& panel, const features::FeatureSpec& spec,
                                  models::Layout layout, double train_fraction, double val_fraction,
                                  std::size_t stride) {
    const auto split = data::chronological_split(panel, train_fraction);
    const auto ranges = split_validation(split.train.slots, panel.slots_per_day(), val_fraction);
    const std::size_t steps = layout == models::Layout::sequence ? spec.horizon() : 1;
    const auto anchors = [&](data::SlotRange r) { return features::enumerate_samples(panel, spec, stride, r, steps); };
    return {Dataset(panel, spec, layout, anchors(ranges.train)), Dataset(panel, spec, layout, anchors(ranges.validation)),
            Dataset(panel, spec, layout, anchors(split.test.slots))};
}

double validate(nn::Sequential& model, const Dataset& samples, bool in_kph) {
    if (samples.empty()) throw ValidationError("empty validation set");
    const nn::Tensor pred = predict_all(model, samples);
    return eval::rmse(eval::make_prediction_set(samples, pred, in_kph)).aggregate;
}

void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        // Rejection sampling keeps the draw unbiased.
        const std::uint64_t bound = i;
        const std::uint64_t limit = Rng::max() - (Rng::max() % bound);
        std::uint64_t r = rng();
        while (r >= limit) r = rng();
        std::swap(idx[i - 1], idx[static_cast<std::size_t>(r % bound)]);
    }
}

namespace {

void dump_divergence(const TrainConfig& cfg, nn::Sequential& model, const Dataset& data,
                     std::span<const std::size_t> batch, std::size_t iter, double loss) {
    if (cfg.divergence_dump.empty()) return;
    json anchors = json::array();
    for (std::size_t i : batch) anchors.push_back({data.anchors()[i].edge, data.anchors()[i].slot});
    const json j = {{"iteration", iter},
                    {"loss", std::isnan(loss) ? "nan" : (loss > 0 ? "inf" : "-inf")},
                    {"batch_anchors", anchors},
                    {"train_config", json::parse(to_json_string(cfg))}};
    io::write_text_atomic(cfg.divergence_dump, j.dump(2) + "\n");
    auto ckpt_path = cfg.divergence_dump;
    ckpt_path += ".fcw";
    nn::save_checkpoint(ckpt_path, nn::capture(model, "{}"));
}

// Restarts the running statistics and averages them over fresh mini-batches
// so that inference sees the current weights only.
class BatchNormRefresh {
public:
    BatchNormRefresh(nn::Sequential& model, const Dataset& data, const TrainConfig& cfg)
        : model_(model), data_(data), cfg_(cfg), order_(iota_index(data.size())) {
        for (std::size_t i = 0; i < model.size(); ++i) {
            if (auto* bn = dynamic_cast<nn::BatchNorm*>(&model.layer(i))) layers_.push_back(bn);
        }
        Rng rng = substream(cfg.rng_seed, "bn-refresh");
        shuffle_indices(order_, rng);
    }

    void operator()() {
        if (cfg_.bn_refresh_batches == 0 || layers_.empty()) return;
        for (auto* bn : layers_) bn->reset_running_stats();
        std::vector<std::size_t> batch(cfg_.t_mb);
        std::size_t cursor = 0;
        for (std::size_t k = 0; k < cfg_.bn_refresh_batches; ++k) {
            for (auto& i : batch) {
                i = order_[cursor];
                cursor = (cursor + 1) % order_.size();
            }
            model_.forward(data_.inputs(batch), nn::Mode::train);
        }
    }

private:
    nn::Sequential& model_;
    const Dataset& data_;
    const TrainConfig& cfg_;
    std::vector<std::size_t> order_;
    std::vector<nn::BatchNorm*> layers_;
};

}  // namespace

TrainResult train(nn::Sequential model, const Dataset& train_set, const Dataset& val_set, const TrainConfig& cfg) {
    cfg.check();
    if (train_set.size() < cfg.t_mb) {
        throw ValidationError("need at least t_mb = " + std::to_string(cfg.t_mb) + " training samples, have " +
                              std::to_string(train_set.size()));
    }
    Rng shuffle_rng = substream(cfg.rng_seed, "shuffle");
    nn::Adam adam({0.9, 0.999, 1e-8, cfg.eta0, cfg.alpha0, cfg.bias_correction});
    const nn::ElasticNet reg{cfg.lambda_l1, cfg.lambda_l2};
    const auto params = model.parameters();

    TrainResult result;
    result.model = model;
    TrainLog& log = result.log;
    std::size_t stale = 0;

    std::vector<std::size_t> order = iota_index(train_set.size());
    std::size_t cursor = order.size();
    std::vector<std::size_t> batch(cfg.t_mb);

    BatchNormRefresh refresh_bn(model, train_set, cfg);
    const auto check = [&](LogRow& row) {
        refresh_bn();
        row.val_rmse = validate(model, val_set);
        if (row.val_rmse < log.best_val_rmse) {
            log.best_val_rmse = row.val_rmse;
            log.best_iter = row.iter;
            result.model = model;
            stale = 0;
        } else {
            ++stale;
        }
    };

    for (std::size_t iter = 1; iter <= cfg.max_epochs; ++iter) {
        if (cursor + cfg.t_mb > order.size()) {
            shuffle_indices(order, shuffle_rng);
            cursor = 0;
        }
        std::copy_n(order.begin() + static_cast<std::ptrdiff_t>(cursor), cfg.t_mb, batch.begin());
        cursor += cfg.t_mb;

        const nn::Tensor x = train_set.inputs(batch);
        const nn::Tensor y = train_set.targets(batch);
        model.zero_grad();
        const nn::Tensor pred = model.forward(x, nn::Mode::train);
        const double loss = nn::quadratic_loss(pred, y);
        const double penalty = nn::elastic_net_penalty(params, reg);
        if (!std::isfinite(loss + penalty)) {
            dump_divergence(cfg, model, train_set, batch, iter, loss + penalty);
            throw TrainingDiverged("non-finite loss at iteration " + std::to_string(iter));
        }
        model.backward(nn::quadratic_loss_grad(pred, y));
        nn::add_elastic_net_grad(params, reg);
        adam.step(params);

        LogRow row{iter, loss, std::numeric_limits<double>::quiet_NaN(), adam.learning_rate()};
        const bool last = iter == cfg.max_epochs;
        if (!val_set.empty() && (iter % cfg.val_every == 0 || last)) check(row);
        log.rows.push_back(row);
        if (!val_set.empty() && stale >= cfg.patience) {
            log.stop = StopReason::early_stopping;
            break;
        }
    }
    if (val_set.empty()) {
        refresh_bn();
        result.model = std::move(model);
        log.best_iter = log.rows.empty() ? 0 : log.rows.back().iter;
    }
    return result;
}

std::vector<GridResult> grid_search(const std::vector<GridCandidate>& candidates, const Dataset& train_set,
                                    const Dataset& val_set) {
    if (candidates.empty()) throw ValidationError("grid search needs at least one candidate");
    if (val_set.empty()) throw ValidationError("grid search needs a validation set");
    std::vector<GridResult> results;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        Rng init = substream(c.train.rng_seed, "init");
        auto trained = train(models::build_model(c.model, init), train_set, val_set, c.train);
        results.push_back({i, validate(trained.model, val_set)});
    }
    std::stable_sort(results.begin(), results.end(),
                     [](const GridResult& a, const GridResult& b) { return a.val_rmse < b.val_rmse; });
    return results;
}

}  // namespace fcd::training
