#pragma once

#include <cstddef>

#include "fcdcast/rng.hpp"
#include "fcdcast/tensor.hpp"

namespace fcd::nn {

class Sequential;

/// sqrt(6 / (fan_in + fan_out)) * N(0, 1), shape [fan_in, fan_out].
Tensor init_glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng);
/// Fills an existing tensor with the same prescription.
void fill_glorot(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng);

/// 1/2 on the diagonal plus N(0, epsilon) noise on every entry, [rows, cols].
Tensor init_lstm_diagonal(std::size_t rows, std::size_t cols, double epsilon, Rng& rng);
inline Tensor init_lstm_diagonal(std::size_t hidden, double epsilon, Rng& rng) {
    return init_lstm_diagonal(hidden, hidden, epsilon, rng);
}

struct InitOptions {
    double lstm_epsilon = 1e-2;
};

/// Glorot for dense and conv kernels (conv fans are channels * R^2),
/// diagonal for LSTM matrices. Layers are visited in order so a seeded rng
/// gives reproducible weights.
void initialize(Sequential& model, Rng& rng, InitOptions options = {});

}  // namespace fcd::nn
