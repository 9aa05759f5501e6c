#include "fcdcast/init.hpp"

#include <cmath>

#include "fcdcast/errors.hpp"
#include "fcdcast/layers.hpp"
#include "fcdcast/lstm.hpp"
#include "fcdcast/sequential.hpp"

namespace fcd::nn {

void fill_glorot(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    if (fan_in == 0 || fan_out == 0) throw ValidationError("glorot fans must be positive");
    const double scale = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& w : t.values()) w = scale * standard_normal(rng);
}

Tensor init_glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    Tensor t({fan_in, fan_out});
    fill_glorot(t, fan_in, fan_out, rng);
    return t;
}

Tensor init_lstm_diagonal(std::size_t rows, std::size_t cols, double epsilon, Rng& rng) {
    if (rows == 0 || cols == 0) throw ValidationError("lstm init extents must be positive");
    Tensor t({rows, cols});
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const double noise = epsilon > 0.0 ? epsilon * standard_normal(rng) : 0.0;
            t[r * cols + c] = (r == c ? 0.5 : 0.0) + noise;
        }
    }
    return t;
}

void initialize(Sequential& model, Rng& rng, InitOptions options) {
    for (std::size_t i = 0; i < model.size(); ++i) {
        Layer& layer = model.layer(i);
        if (auto* dense = dynamic_cast<Dense*>(&layer)) {
            fill_glorot(dense->theta(), dense->in(), dense->out(), rng);
        } else if (auto* conv = dynamic_cast<Conv2d*>(&layer)) {
            const std::size_t area = conv->receptive() * conv->receptive();
            fill_glorot(conv->theta(), conv->in_channels() * area, conv->out_channels() * area, rng);
        } else if (auto* lstm = dynamic_cast<Lstm*>(&layer)) {
            for (std::size_t g = 0; g < Lstm::kGates; ++g) {
                const auto gate = static_cast<Lstm::Gate>(g);
                lstm->spatial(gate) = init_lstm_diagonal(lstm->in(), lstm->hidden(), options.lstm_epsilon, rng);
                lstm->temporal(gate) = init_lstm_diagonal(lstm->hidden(), options.lstm_epsilon, rng);
            }
        }
    }
}

}  // namespace fcd::nn
