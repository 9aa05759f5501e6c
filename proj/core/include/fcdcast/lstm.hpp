#pragma once

#include <array>
#include <cstddef>

#include "fcdcast/layer.hpp"

namespace fcd::nn {

double sigmoid(double x);

/// LSTM without peepholes over [B, T, F_in] -> [B, T, F_H].
///
/// Every gate (input i, forget f, output o, candidate g) has a spatial
/// weight [F_in x F_H] applied to x_tau and a temporal weight [F_H x F_H]
/// applied to h_{tau-1}; no bias. The same weights serve every tau, and
/// h and c are zero before the first step.
///   i, f, o = sigmoid(.), g = tanh(.)
///   c = f * c_prev + i * g,  h = o * tanh(c)
class Lstm final : public Layer {
public:
    enum Gate : std::size_t { input_gate = 0, forget_gate = 1, output_gate = 2, cell_gate = 3 };
    static constexpr std::size_t kGates = 4;

    Lstm(std::size_t in, std::size_t hidden);

    std::string kind() const override { return "lstm"; }
    Shape output_shape(const Shape& input) const override;
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<ParamRef> parameters() override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Lstm>(*this); }

    void reset_stream() override;
    /// Advances the carried (h, c) by the steps in x ([B, T', F_in]).
    Tensor stream(const Tensor& x) override;

    std::size_t in() const noexcept { return in_; }
    std::size_t hidden() const noexcept { return hidden_; }
    Tensor& spatial(Gate g) noexcept { return wx_[g]; }
    Tensor& temporal(Gate g) noexcept { return wh_[g]; }
    const Tensor& spatial(Gate g) const noexcept { return wx_[g]; }
    const Tensor& temporal(Gate g) const noexcept { return wh_[g]; }

    /// Gate activations and cell state cached by the last forward, [B, T, F_H].
    const Tensor& gate_cache(Gate g) const noexcept { return gates_[g]; }
    const Tensor& cell_cache() const noexcept { return cell_; }

private:
    // Runs steps from (h0, c0), writing caches when `cache` is set.
    Tensor run(const Tensor& x, std::vector<double>& h, std::vector<double>& c, bool cache);

    std::size_t in_;
    std::size_t hidden_;
    std::array<Tensor, kGates> wx_;
    std::array<Tensor, kGates> wh_;
    std::array<Tensor, kGates> dwx_;
    std::array<Tensor, kGates> dwh_;

    Tensor input_;
    std::array<Tensor, kGates> gates_;
    Tensor cell_;
    Tensor hidden_out_;

    std::vector<double> stream_h_;
    std::vector<double> stream_c_;
};

}  // namespace fcd::nn
