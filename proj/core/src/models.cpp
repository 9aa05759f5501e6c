#include "fcdcast/models.hpp"

#include <nlohmann/json.hpp>

#include "fcdcast/errors.hpp"
#include "fcdcast/init.hpp"
#include "fcdcast/lstm.hpp"

namespace fcd::models {

using nlohmann::json;

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::fnn1: return "fnn1";
        case ModelKind::fnn3: return "fnn3";
        case ModelKind::vgg: return "vgg";
        case ModelKind::lstm: return "lstm";
    }
    return "?";
}

ModelKind parse_model_kind(const std::string& text) {
    if (text == "fnn1") return ModelKind::fnn1;
    if (text == "fnn3") return ModelKind::fnn3;
    if (text == "vgg") return ModelKind::vgg;
    if (text == "lstm") return ModelKind::lstm;
    throw ValidationError("unknown model '" + text + "' (expected fnn1|fnn3|vgg|lstm)");
}

Layout layout_of(ModelKind kind) {
    switch (kind) {
        case ModelKind::vgg: return Layout::image;
        case ModelKind::lstm: return Layout::sequence;
        default: return Layout::flat;
    }
}

ModelSpec default_model_spec(ModelKind kind, features::InputMode mode, std::size_t hidden_size) {
    ModelSpec spec;
    spec.kind = kind;
    spec.input_mode = mode;
    features::FeatureSpec fs;
    fs.mode = mode;
    spec.fnn.input_size = fs.input_size();
    spec.fnn.hidden_size = hidden_size;
    spec.fnn.n_hidden = kind == ModelKind::fnn3 ? 3 : 1;
    spec.fnn.output_size = fs.target_edges() * fs.horizon();
    spec.vgg.channels = fs.full.df + 1;
    spec.vgg.height = fs.full.n0;
    spec.vgg.width = fs.full.bf;
    spec.vgg.output_size = fs.full.output_size();
    spec.lstm.input_size = fs.input_size();
    spec.lstm.hidden_size = hidden_size;
    spec.lstm.output_size = fs.target_edges();
    spec.lstm.t_steps = fs.horizon();
    return spec;
}

namespace {

std::size_t positive(const json& j, const char* key, std::size_t fallback) {
    if (!j.contains(key)) return fallback;
    const auto v = j.at(key).get<long long>();
    if (v <= 0) throw ValidationError(std::string("model config: '") + key + "' must be positive");
    return static_cast<std::size_t>(v);
}

std::vector<std::size_t> positive_list(const json& j, const char* key, std::vector<std::size_t> fallback) {
    if (!j.contains(key)) return fallback;
    std::vector<std::size_t> out;
    for (const auto& v : j.at(key)) {
        const auto x = v.get<long long>();
        if (x <= 0) throw ValidationError(std::string("model config: '") + key + "' entries must be positive");
        out.push_back(static_cast<std::size_t>(x));
    }
    return out;
}

}  // namespace

ModelSpec model_spec_from_json(const json& j) {
    try {
        if (!j.is_object()) throw ValidationError("model config must be a JSON object");
        const auto kind = parse_model_kind(j.value("model", std::string("fnn1")));
        const auto mode = features::parse_input_mode(
            j.value("input_mode", std::string(kind == ModelKind::vgg ? "full" : "reduced")));
        const std::size_t hidden = positive(j, "hidden_size", 32);
        ModelSpec spec = default_model_spec(kind, mode, hidden);

        spec.fnn.input_size = positive(j, "input_size", spec.fnn.input_size);
        spec.fnn.output_size = positive(j, "output_size", spec.fnn.output_size);
        spec.fnn.n_hidden = positive(j, "n_hidden", spec.fnn.n_hidden);
        spec.lstm.input_size = spec.fnn.input_size;
        spec.lstm.output_size = positive(j, "step_outputs", spec.lstm.output_size);
        spec.lstm.t_steps = positive(j, "lstm_steps", spec.lstm.t_steps);
        spec.lstm_init_epsilon = j.value("lstm_init_epsilon", spec.lstm_init_epsilon);

        const auto act = j.value("activation", std::string("leaky_relu"));
        if (act == "leaky_relu") {
            spec.activation = nn::ActivationKind::leaky_relu;
        } else if (act == "elu") {
            spec.activation = nn::ActivationKind::elu;
        } else {
            throw ValidationError("model config: unknown activation '" + act + "'");
        }
        spec.slope = j.value("slope", spec.slope);

        if (j.contains("vgg")) {
            const auto& v = j.at("vgg");
            auto& g = spec.vgg;
            g.channels = positive(v, "channels", g.channels);
            g.height = positive(v, "height", g.height);
            g.width = positive(v, "width", g.width);
            g.blocks = positive_list(v, "blocks", g.blocks);
            g.convs = positive_list(v, "convs", g.convs);
            g.fc = positive_list(v, "fc", g.fc);
            g.conv_receptive = positive(v, "conv_receptive", g.conv_receptive);
            g.pool_receptive = positive(v, "pool_receptive", g.pool_receptive);
            g.pool_stride = positive(v, "pool_stride", g.pool_stride);
        }
        if (j.contains("output_size")) spec.vgg.output_size = spec.fnn.output_size;

        if (j.contains("batch_norm")) {
            const auto& b = j.at("batch_norm");
            spec.batch_norm.epsilon = b.value("epsilon", spec.batch_norm.epsilon);
            spec.batch_norm.momentum = b.value("momentum", spec.batch_norm.momentum);
            const auto running = b.value("running", std::string("cumulative"));
            if (running == "cumulative") {
                spec.batch_norm.running = nn::RunningStats::cumulative;
            } else if (running == "ema") {
                spec.batch_norm.running = nn::RunningStats::ema;
            } else {
                throw ValidationError("model config: unknown running statistics '" + running + "'");
            }
        }
        return spec;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("model config: ") + e.what());
    }
}

json to_json(const ModelSpec& spec) {
    json j;
    j["model"] = to_string(spec.kind);
    j["input_mode"] = features::to_string(spec.input_mode);
    j["activation"] = spec.activation == nn::ActivationKind::elu ? "elu" : "leaky_relu";
    j["slope"] = spec.slope;
    j["batch_norm"] = {{"epsilon", spec.batch_norm.epsilon},
                       {"running", spec.batch_norm.running == nn::RunningStats::ema ? "ema" : "cumulative"},
                       {"momentum", spec.batch_norm.momentum}};
    switch (spec.kind) {
        case ModelKind::fnn1:
        case ModelKind::fnn3:
            j["input_size"] = spec.fnn.input_size;
            j["hidden_size"] = spec.fnn.hidden_size;
            j["n_hidden"] = spec.fnn.n_hidden;
            j["output_size"] = spec.fnn.output_size;
            break;
        case ModelKind::vgg:
            j["output_size"] = spec.vgg.output_size;
            j["vgg"] = {{"channels", spec.vgg.channels},
                        {"height", spec.vgg.height},
                        {"width", spec.vgg.width},
                        {"blocks", spec.vgg.blocks},
                        {"convs", spec.vgg.convs},
                        {"fc", spec.vgg.fc},
                        {"conv_receptive", spec.vgg.conv_receptive},
                        {"pool_receptive", spec.vgg.pool_receptive},
                        {"pool_stride", spec.vgg.pool_stride}};
            break;
        case ModelKind::lstm:
            j["input_size"] = spec.lstm.input_size;
            j["hidden_size"] = spec.lstm.hidden_size;
            j["step_outputs"] = spec.lstm.output_size;
            j["lstm_steps"] = spec.lstm.t_steps;
            j["lstm_init_epsilon"] = spec.lstm_init_epsilon;
            break;
    }
    return j;
}

nn::Sequential build_fnn(const FnnConfig& cfg, const ModelSpec& spec) {
    if (cfg.n_hidden == 0) throw ValidationError("an FNN needs at least one hidden layer");
    nn::Sequential net;
    std::size_t width = cfg.input_size;
    for (std::size_t i = 0; i < cfg.n_hidden; ++i) {
        net.add<nn::Dense>(width, cfg.hidden_size);
        net.add<nn::Activation>(spec.activation, spec.slope);
        net.add<nn::BatchNorm>(cfg.hidden_size, spec.batch_norm);
        width = cfg.hidden_size;
    }
    net.add<nn::Dense>(width, cfg.output_size);
    net.add<nn::OutputClamp>();
    return net;
}

nn::Sequential build_vgg(const VggConfig& cfg, const ModelSpec& spec) {
    if (cfg.blocks.size() != cfg.convs.size()) throw ValidationError("vgg: blocks and convs differ in length");
    nn::Sequential net;
    std::size_t channels = cfg.channels;
    std::size_t h = cfg.height;
    std::size_t w = cfg.width;
    const std::size_t pad = cfg.conv_receptive / 2;
    for (std::size_t b = 0; b < cfg.blocks.size(); ++b) {
        for (std::size_t c = 0; c < cfg.convs[b]; ++c) {
            net.add<nn::Conv2d>(channels, cfg.blocks[b], cfg.conv_receptive, 1, pad);
            net.add<nn::Activation>(spec.activation, spec.slope);
            net.add<nn::BatchNorm>(cfg.blocks[b], spec.batch_norm);
            channels = cfg.blocks[b];
        }
        const auto fits = [&](std::size_t n) {
            return n >= cfg.pool_receptive && (n - cfg.pool_receptive) % cfg.pool_stride == 0;
        };
        if (!fits(h) || !fits(w)) {
            throw ValidationError("vgg: pooling after block " + std::to_string(b) + " underflows a " +
                                  std::to_string(h) + "x" + std::to_string(w) + " map");
        }
        net.add<nn::MaxPool2d>(cfg.pool_receptive, cfg.pool_stride);
        h = (h - cfg.pool_receptive) / cfg.pool_stride + 1;
        w = (w - cfg.pool_receptive) / cfg.pool_stride + 1;
    }
    net.add<nn::Flatten>();
    std::size_t width = channels * h * w;
    for (std::size_t units : cfg.fc) {
        net.add<nn::Dense>(width, units);
        net.add<nn::Activation>(spec.activation, spec.slope);
        net.add<nn::BatchNorm>(units, spec.batch_norm);
        width = units;
    }
    net.add<nn::Dense>(width, cfg.output_size);
    net.add<nn::OutputClamp>();
    return net;
}

nn::Sequential build_lstm(const LstmConfig& cfg, const ModelSpec& spec) {
    nn::Sequential net;
    net.add<nn::BatchNorm>(cfg.input_size, spec.batch_norm);
    net.add<nn::Lstm>(cfg.input_size, cfg.hidden_size);
    net.add<nn::Dense>(cfg.hidden_size, cfg.output_size);
    net.add<nn::OutputClamp>();
    return net;
}

nn::Sequential build_model(const ModelSpec& spec, Rng& rng) {
    nn::Sequential net;
    switch (spec.kind) {
        case ModelKind::fnn1:
        case ModelKind::fnn3: net = build_fnn(spec.fnn, spec); break;
        case ModelKind::vgg: net = build_vgg(spec.vgg, spec); break;
        case ModelKind::lstm: net = build_lstm(spec.lstm, spec); break;
    }
    nn::initialize(net, rng, {spec.lstm_init_epsilon});
    return net;
}

ParameterCount count_parameters(nn::Sequential& model) {
    ParameterCount out;
    out.layers = model.weight_counts();
    for (const auto& l : out.layers) out.total += l.weights;
    return out;
}

std::size_t fnn_weight_count(const FnnConfig& cfg) {
    return cfg.input_size * cfg.hidden_size + (cfg.n_hidden - 1) * cfg.hidden_size * cfg.hidden_size +
           cfg.hidden_size * cfg.output_size;
}

std::size_t lstm_weight_count(const LstmConfig& cfg) {
    return 4 * (cfg.input_size * cfg.hidden_size + cfg.hidden_size * cfg.hidden_size) +
           cfg.hidden_size * cfg.output_size;
}

}  // namespace fcd::models
