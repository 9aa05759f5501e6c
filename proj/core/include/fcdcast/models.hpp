#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fcdcast/batch_norm.hpp"
#include "fcdcast/featurize.hpp"
#include "fcdcast/layers.hpp"
#include "fcdcast/rng.hpp"
#include "fcdcast/sequential.hpp"

namespace fcd::models {

enum class ModelKind { fnn1, fnn3, vgg, lstm };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& text);

struct FnnConfig {
    std::size_t input_size = 32;
    std::size_t hidden_size = 32;
    std::size_t n_hidden = 1;
    std::size_t output_size = 20;
};

struct VggConfig {
    std::size_t channels = 8;
    std::size_t height = 32;
    std::size_t width = 32;
    /// Output channels of each conv block; a max-pool follows every block.
    std::vector<std::size_t> blocks{32, 64, 128, 256, 256};
    /// Convolutions per block.
    std::vector<std::size_t> convs{2, 2, 3, 3, 3};
    /// Hidden fully connected widths.
    std::vector<std::size_t> fc{512, 512};
    std::size_t output_size = 640;
    std::size_t conv_receptive = 3;
    std::size_t pool_receptive = 2;
    std::size_t pool_stride = 2;
};

struct LstmConfig {
    std::size_t input_size = 32;
    std::size_t hidden_size = 32;
    /// Per-step head outputs (edges predicted at each step).
    std::size_t output_size = 1;
    std::size_t t_steps = 20;
};

struct ModelSpec {
    ModelKind kind = ModelKind::fnn1;
    features::InputMode input_mode = features::InputMode::reduced;
    FnnConfig fnn;
    VggConfig vgg;
    LstmConfig lstm;
    nn::ActivationKind activation = nn::ActivationKind::leaky_relu;
    double slope = 0.01;
    nn::BatchNormOptions batch_norm;
    double lstm_init_epsilon = 1e-2;
};

/// Sizes consistent with the default feature spec of `mode`.
ModelSpec default_model_spec(ModelKind kind, features::InputMode mode, std::size_t hidden_size = 32);

/// JSON form: {"model", "input_mode", "hidden_size", "input_size",
/// "output_size", "n_hidden", "activation", "slope", "lstm_steps",
/// "lstm_init_epsilon", "vgg": {...}, "batch_norm": {...}}. Missing keys
/// take the defaults of `default_model_spec(model, input_mode)`.
ModelSpec model_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ModelSpec& spec);

/// How a model consumes samples.
enum class Layout {
    /// [B, F0]
    flat,
    /// [B, df + 1, n0, bf]
    image,
    /// [B, T, F0] in, [B, T, edges] out
    sequence,
};

Layout layout_of(ModelKind kind);

/// [dense -> activation -> BN] x n_hidden, dense, output clamp.
nn::Sequential build_fnn(const FnnConfig& cfg, const ModelSpec& spec = {});
/// conv blocks of [conv -> activation -> BN] each followed by max-pool,
/// then [dense -> activation -> BN] per fc width, dense, output clamp.
/// Throws ValidationError when pooling underflows the spatial extent.
nn::Sequential build_vgg(const VggConfig& cfg, const ModelSpec& spec = {});
/// BN over the step inputs, one LSTM layer, a shared dense head per step,
/// output clamp.
nn::Sequential build_lstm(const LstmConfig& cfg, const ModelSpec& spec = {});

/// Builds the architecture of `spec` and initializes it from `rng`.
nn::Sequential build_model(const ModelSpec& spec, Rng& rng);

struct ParameterCount {
    std::vector<nn::LayerWeightCount> layers;
    std::size_t total = 0;
};

/// Weight-matrix entries only; batch-norm scale and shift are excluded.
ParameterCount count_parameters(nn::Sequential& model);

/// Closed forms for the three families, used as independent references.
std::size_t fnn_weight_count(const FnnConfig& cfg);
std::size_t lstm_weight_count(const LstmConfig& cfg);

}  // namespace fcd::models
