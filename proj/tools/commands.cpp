#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fcdcast/binary_io.hpp"
#include "fcdcast/checkpoint.hpp"
#include "fcdcast/errors.hpp"
#include "fcdcast/evaluate.hpp"
#include "fcdcast/gradient_check.hpp"
#include "fcdcast/panel_io.hpp"
#include "fcdcast/sample_cache.hpp"
#include "fcdcast/toy_models.hpp"
#include "fcdcast/training.hpp"
#include "fcdcast/version.hpp"
#include "manifest.hpp"

namespace fcd::cli {

namespace {

using nlohmann::json;

// Night hours removed before sampling: 23:00 to 05:00.
constexpr int kNightStart = 23;
constexpr int kNightEnd = 5;

struct Common {
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--seed", c.seed, "Root seed for every random sub-stream");
    cmd->add_option("--threads", c.threads, "Worker cap (computation is single-threaded)")->check(CLI::PositiveNumber);
}

std::string read_text(const std::string& path) {
    const auto bytes = io::read_file(path);
    return {bytes.begin(), bytes.end()};
}

json parse_json_file(const std::string& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

data::SpeedPanel prepare_panel(const std::string& path, bool night_mask) {
    data::SpeedPanel panel = data::read_panel(path);
    return night_mask ? data::mask_night_hours(panel, kNightStart, kNightEnd) : panel;
}

struct GenerateArgs {
    data::SyntheticConfig cfg;
    std::string out;
};

int run_generate(const std::vector<std::string>& args, GenerateArgs& a, const Common& c) {
    a.cfg.rng_seed = c.seed;
    const data::SpeedPanel panel = data::generate_synthetic(a.cfg);
    data::write_panel(panel, a.out);
    RunManifest m(args);
    m.seed(c.seed, {"synthetic"});
    m.output(a.out);
    m.write(a.out);
    std::cout << "panel " << panel.n_edges() << " edges x " << panel.n_days() << " days -> " << a.out << " ("
              << file_digest(a.out) << ")\n";
    return 0;
}

struct IngestArgs {
    std::string speeds;
    std::string ffs;
    std::string out;
    std::size_t slots_per_day = data::kSlotsPerDay;
};

int run_ingest(const std::vector<std::string>& args, const IngestArgs& a, const Common& c) {
    const auto obs = data::read_observations_csv(a.speeds);
    const auto ffs = data::read_free_flow_csv(a.ffs);
    const data::SpeedPanel panel = data::load_panel(obs, ffs, a.slots_per_day);
    data::write_panel(panel, a.out);
    RunManifest m(args);
    m.seed(c.seed, {});
    m.input(a.speeds);
    m.input(a.ffs);
    m.output(a.out);
    m.write(a.out);
    std::cout << "panel " << panel.n_edges() << " edges x " << panel.n_days() << " days from " << obs.size()
              << " observations -> " << a.out << "\n";
    return 0;
}

struct FeaturizeArgs {
    std::string panel;
    std::string mode = "reduced";
    std::size_t stride = 1;
    bool night_mask = true;
    std::string out;
};

int run_featurize(const std::vector<std::string>& args, const FeaturizeArgs& a, const Common& c) {
    features::FeatureSpec spec;
    spec.mode = features::parse_input_mode(a.mode);
    const data::SpeedPanel panel = prepare_panel(a.panel, a.night_mask);
    const auto anchors = features::enumerate_samples(panel, spec, a.stride);
    features::write_sample_cache(features::build_sample_cache(panel, spec, anchors), a.out);
    RunManifest m(args);
    m.seed(c.seed, {});
    m.input(a.panel);
    m.output(a.out);
    m.write(a.out);
    std::cout << anchors.size() << " samples, input " << spec.input_size() << ", output "
              << spec.target_edges() * spec.horizon() << " -> " << a.out << "\n";
    return 0;
}

struct TrainArgs {
    std::string panel;
    std::string mode = "reduced";
    std::string model = "fnn1";
    std::string config;
    std::string out;
    std::string log;
    std::size_t hidden = 32;
    std::size_t stride = 1;
    double train_fraction = 0.9;
    bool night_mask = true;
};

int run_train(const std::vector<std::string>& args, const TrainArgs& a, const Common& c, bool seed_given) {
    const auto mode = features::parse_input_mode(a.mode);
    const auto kind = models::parse_model_kind(a.model);
    models::ModelSpec spec = models::default_model_spec(kind, mode, a.hidden);
    training::TrainConfig cfg;
    if (!a.config.empty()) {
        json j = parse_json_file(a.config);
        if (!j.is_object()) throw ValidationError(a.config + ": expected a JSON object");
        if (j.contains("model")) {
            json overrides = j.at("model");
            if (!overrides.is_object()) throw ValidationError(a.config + ": \"model\" must be an object");
            overrides["model"] = a.model;
            overrides["input_mode"] = a.mode;
            if (!overrides.contains("hidden_size")) overrides["hidden_size"] = a.hidden;
            spec = models::model_spec_from_json(overrides);
            j.erase("model");
        }
        cfg = training::train_config_from_json(j.dump());
    }
    if (seed_given || a.config.empty()) cfg.rng_seed = c.seed;
    cfg.divergence_dump = a.out + ".diverged.json";
    cfg.check();

    features::FeatureSpec fspec;
    fspec.mode = mode;
    const data::SpeedPanel panel = prepare_panel(a.panel, a.night_mask);
    const auto layout = models::layout_of(kind);
    auto sets = training::make_split_datasets(panel, fspec, layout, a.train_fraction, cfg.val_fraction, a.stride);
    Rng init = substream(cfg.rng_seed, "init");
    nn::Sequential model = models::build_model(spec, init);
    std::cout << models::to_string(kind) << " (" << a.mode << "): " << models::count_parameters(model).total
              << " weights, " << sets.train.size() << " train / " << sets.validation.size() << " validation samples\n";
    auto result = training::train(std::move(model), sets.train, sets.validation, cfg);

    const json config = {{"model", models::to_json(spec)},
                         {"input_mode", a.mode},
                         {"train", json::parse(training::to_json_string(cfg))},
                         {"train_fraction", a.train_fraction},
                         {"night_mask", a.night_mask},
                         {"stride", a.stride}};
    nn::save_checkpoint(a.out, nn::capture(result.model, config.dump()));
    RunManifest m(args);
    m.seed(cfg.rng_seed, {"init", "shuffle"});
    m.input(a.panel);
    if (!a.config.empty()) m.config(a.config);
    m.output(a.out);
    if (!a.log.empty()) {
        io::write_text_atomic(a.log, result.log.to_csv());
        m.output(a.log);
    }
    m.write(a.out);
    const auto& rows = result.log.rows;
    std::cout << "stopped after " << rows.size() << " iterations (" << training::to_string(result.log.stop)
              << "); best validation rmse " << fmt(result.log.best_val_rmse) << " at iteration "
              << result.log.best_iter << "\n";
    return 0;
}

struct EvaluateArgs {
    std::string panel;
    std::string ckpt;
    std::string mode;
    std::string out;
    std::string svg;
    bool regimes = false;
    std::size_t stride = 1;
    std::optional<double> train_fraction;
    std::optional<bool> night_mask;
};

int run_evaluate(const std::vector<std::string>& args, const EvaluateArgs& a, const Common& c) {
    const nn::Checkpoint ckpt = nn::load_checkpoint(a.ckpt);
    json config;
    try {
        config = json::parse(ckpt.config_json);
    } catch (const json::exception& e) {
        throw FormatError(a.ckpt + ": checkpoint config is not JSON");
    }
    if (!config.contains("model")) throw FormatError(a.ckpt + ": checkpoint carries no model description");
    const models::ModelSpec spec = models::model_spec_from_json(config.at("model"));
    const auto mode = features::parse_input_mode(a.mode);
    if (mode != spec.input_mode) {
        throw ValidationError("checkpoint was trained on " + features::to_string(spec.input_mode) + " input, not " +
                              a.mode);
    }
    Rng unused = substream(c.seed, "init");
    nn::Sequential model = models::build_model(spec, unused);
    nn::restore(ckpt, model);

    const double train_fraction = a.train_fraction.value_or(config.value("train_fraction", 0.9));
    const bool night_mask = a.night_mask.value_or(config.value("night_mask", true));
    features::FeatureSpec fspec;
    fspec.mode = mode;
    const data::SpeedPanel panel = prepare_panel(a.panel, night_mask);
    const auto split = data::chronological_split(panel, train_fraction);
    const auto layout = models::layout_of(spec.kind);
    const std::size_t steps = layout == models::Layout::sequence ? fspec.horizon() : 1;
    const training::Dataset test(panel, fspec, layout,
                                 features::enumerate_samples(panel, fspec, a.stride, split.test.slots, steps));
    if (test.empty()) throw ValidationError("no complete test samples after the split");

    const nn::Tensor pred = training::predict_all(model, test);
    const auto set = eval::make_prediction_set(test, pred, true);
    std::optional<std::vector<double>> variation;
    if (a.regimes) {
        variation.emplace();
        for (const auto& anchor : test.anchors()) variation->push_back(eval::regime_variation(panel, fspec, anchor));
    }
    const eval::EvalReport report = eval::evaluate(set, variation);
    io::write_text_atomic(a.out, report.to_csv());
    RunManifest m(args);
    m.seed(c.seed, {});
    m.input(a.panel);
    m.input(a.ckpt);
    m.output(a.out);
    if (!a.svg.empty()) {
        io::write_text_atomic(a.svg, report.to_svg(models::to_string(spec.kind) + " (" + a.mode + ")"));
        m.output(a.svg);
    }
    m.write(a.out);
    for (const auto& r : report.regimes) {
        std::cout << r.regime << ": n=" << r.n_samples << " rmse " << fmt(r.rmse.aggregate) << " kph, benchmark "
                  << fmt(r.rmse_bench.aggregate) << " kph, Q2 "
                  << (r.q2_aggregate ? fmt(*r.q2_aggregate) : std::string("undefined")) << ", MAPE "
                  << fmt(r.mape.aggregate) << "%\n";
    }
    return 0;
}

int run_count_params(const std::string& path) {
    const models::ModelSpec spec = models::model_spec_from_json(parse_json_file(path));
    Rng unused = substream(0, "init");
    nn::Sequential model = models::build_model(spec, unused);
    const auto count = models::count_parameters(model);
    for (const auto& layer : count.layers) {
        std::cout << layer.index << ' ' << layer.kind << ' ' << layer.shapes << ' ' << layer.weights << '\n';
    }
    std::cout << count.total << '\n';
    return 0;
}

int run_gradient_check(const std::string& model, const std::string& tolerance_text, const Common& c) {
    const auto kind = models::parse_model_kind(model);
    double tolerance = 0.0;
    try {
        tolerance = std::stod(tolerance_text);
    } catch (const std::exception&) {
        throw ValidationError("--tolerance must be a number");
    }
    auto toy = models::make_toy_case(kind, c.seed);
    const auto report = nn::gradient_check(toy.model, toy.input, toy.target, toy.options);
    std::cout << model << ": " << report.checked << " entries, max rel err " << fmt(report.max_rel_error)
              << " at " << report.worst_entry << '\n';
    const bool pass = report.passed(tolerance);
    std::cout << "max rel err < " << tolerance_text << ": " << (pass ? "PASS" : "FAIL") << '\n';
    return pass ? 0 : 2;
}

int run_repro(const std::string& manifest_file) {
    const json m = parse_json_file(manifest_file);
    std::vector<std::string> args;
    try {
        args = m.at("command").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw ValidationError(manifest_file + ": " + e.what());
    }
    if (args.empty() || args.front() == "repro") throw ValidationError(manifest_file + ": nothing to reproduce");
    const auto previous = std::filesystem::current_path();
    std::filesystem::current_path(m.value("working_directory", previous.string()));
    struct Restore {
        std::filesystem::path dir;
        ~Restore() { std::filesystem::current_path(dir); }
    } restore{previous};

    for (const auto& in : m.value("inputs", json::array())) {
        const auto path = in.at("path").get<std::string>();
        if (file_digest(path) != in.at("fnv1a64").get<std::string>()) {
            throw ValidationError("input " + path + " changed since the recorded run");
        }
    }
    const int code = dispatch(args);
    if (code != 0) return code;
    bool same = true;
    for (const auto& out : m.value("outputs", json::array())) {
        const auto path = out.at("path").get<std::string>();
        const auto digest = file_digest(path);
        const bool ok = digest == out.at("fnv1a64").get<std::string>();
        same = same && ok;
        std::cout << path << ' ' << digest << ' ' << (ok ? "OK" : "MISMATCH") << '\n';
    }
    return same ? 0 : 1;
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"Traffic speed forecasting from floating car data", "fcdcast"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    Common common;

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Write a synthetic speed panel");
    generate->add_option("--edges", gen.cfg.n_edges, "Edges on the ring")->check(CLI::PositiveNumber);
    generate->add_option("--days", gen.cfg.n_days, "Days of data");
    generate->add_option("--amplitude", gen.cfg.congestion_amplitude, "Congestion dip depth in [0, 1]");
    generate->add_option("--noise", gen.cfg.noise_std, "White noise standard deviation");
    generate->add_option("--ffs", gen.cfg.free_flow_kph, "Free-flow speed in kph");
    generate->add_option("--out", gen.out, "Panel file")->required();
    add_common(generate, common);

    IngestArgs ing;
    auto* ingest = app.add_subcommand("ingest", "Build a panel from observation and free-flow CSVs");
    ingest->add_option("--speeds", ing.speeds, "CSV edge_id,slot,speed_kph")->required()->check(CLI::ExistingFile);
    ingest->add_option("--ffs", ing.ffs, "CSV edge_id,ffs_kph")->required()->check(CLI::ExistingFile);
    ingest->add_option("--slots-per-day", ing.slots_per_day, "Slots per day")->check(CLI::PositiveNumber);
    ingest->add_option("--out", ing.out, "Panel file")->required();
    add_common(ingest, common);

    FeaturizeArgs feat;
    auto* featurize = app.add_subcommand("featurize", "Write the sample cache of a panel");
    featurize->add_option("--panel", feat.panel, "Panel file")->required()->check(CLI::ExistingFile);
    featurize->add_option("--mode", feat.mode, "full|reduced");
    featurize->add_option("--stride", feat.stride, "Anchor stride in slots");
    featurize->add_flag("--night-mask,!--no-night-mask", feat.night_mask, "Drop 23:00-05:00 (default on)");
    featurize->add_option("--out", feat.out, "Sample cache file")->required();
    add_common(featurize, common);

    TrainArgs tr;
    auto* train = app.add_subcommand("train", "Train a model and write its checkpoint");
    train->add_option("--panel", tr.panel, "Panel file")->required()->check(CLI::ExistingFile);
    train->add_option("--mode", tr.mode, "full|reduced");
    train->add_option("--model", tr.model, "fnn1|fnn3|vgg|lstm");
    train->add_option("--config", tr.config, "Training JSON (optional \"model\" object overrides)")
        ->check(CLI::ExistingFile);
    train->add_option("--hidden", tr.hidden, "Hidden size F_H")->check(CLI::PositiveNumber);
    train->add_option("--stride", tr.stride, "Anchor stride in slots");
    train->add_option("--train-fraction", tr.train_fraction, "Share of days before the test split");
    train->add_flag("--night-mask,!--no-night-mask", tr.night_mask, "Drop 23:00-05:00 (default on)");
    train->add_option("--out", tr.out, "Checkpoint file")->required();
    train->add_option("--log", tr.log, "Training log CSV");
    add_common(train, common);

    EvaluateArgs ev;
    auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on the test split");
    evaluate->add_option("--panel", ev.panel, "Panel file")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--ckpt", ev.ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--mode", ev.mode, "full|reduced")->required();
    evaluate->add_option("--out", ev.out, "Report CSV")->required();
    evaluate->add_option("--svg", ev.svg, "Report chart");
    evaluate->add_flag("--regimes", ev.regimes, "Add the constant/changing/standard breakdown");
    evaluate->add_option("--stride", ev.stride, "Anchor stride in slots");
    evaluate->add_option("--train-fraction", ev.train_fraction, "Override the checkpoint's split");
    evaluate->add_flag("--night-mask,!--no-night-mask", ev.night_mask, "Override the checkpoint's masking");
    add_common(evaluate, common);

    std::string count_config;
    auto* count = app.add_subcommand("count-params", "Print weight counts of a model description");
    count->add_option("--config", count_config, "Model JSON")->required()->check(CLI::ExistingFile);
    add_common(count, common);

    std::string gc_model;
    std::string gc_tolerance = "1e-5";
    auto* gc = app.add_subcommand("gradient-check", "Finite-difference check of a toy model");
    gc->add_option("--model", gc_model, "fnn1|fnn3|vgg|lstm")->required();
    gc->add_option("--tolerance", gc_tolerance, "Maximum relative error");
    add_common(gc, common);

    std::string manifest;
    auto* repro = app.add_subcommand("repro", "Re-run a recorded command and compare output digests");
    repro->add_option("--manifest", manifest, "Manifest JSON")->required()->check(CLI::ExistingFile);
    add_common(repro, common);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        std::cout << kVersion << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n";
        const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        std::cerr << sub->help();
        return 1;
    }

    try {
        if (generate->parsed()) return run_generate(args, gen, common);
        if (ingest->parsed()) return run_ingest(args, ing, common);
        if (featurize->parsed()) return run_featurize(args, feat, common);
        if (train->parsed()) return run_train(args, tr, common, train->count("--seed") > 0);
        if (evaluate->parsed()) return run_evaluate(args, ev, common);
        if (count->parsed()) return run_count_params(count_config);
        if (gc->parsed()) return run_gradient_check(gc_model, gc_tolerance, common);
        if (repro->parsed()) return run_repro(manifest);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const StructuralError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

}  // namespace fcd::cli
