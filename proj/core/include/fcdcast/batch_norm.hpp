#pragma once

#include <cstddef>

#include "fcdcast/layer.hpp"

namespace fcd::nn {

enum class RunningStats {
    /// E_{e+1} = (e E_e + batch_mean) / (e + 1), same for the variance.
    cumulative,
    /// E <- (1 - momentum) E + momentum * batch_mean.
    ema,
};

struct BatchNormOptions {
    double epsilon = 1e-8;
    RunningStats running = RunningStats::cumulative;
    double momentum = 0.1;
};

/// Per-feature standardization over the batch, then y = gamma * x_hat + beta.
///
/// Rank-2 [B, F] and rank-3 [B, T, F] inputs normalize over every leading
/// position; rank-4 [B, C, H, W] inputs normalize per channel over batch and
/// space. Inference uses the running mean and the running variance scaled by
/// n / (n - 1), n being the number of values pooled per feature in training.
class BatchNorm final : public Layer {
public:
    explicit BatchNorm(std::size_t features, BatchNormOptions options = {});

    std::string kind() const override { return "batch_norm"; }
    Shape output_shape(const Shape& input) const override { return input; }
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<ParamRef> parameters() override;
    std::vector<BufferRef> buffers() override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<BatchNorm>(*this); }

    /// When false, train-mode passes leave the running statistics untouched.
    void set_update_running(bool update) noexcept { update_running_ = update; }
    bool update_running() const noexcept { return update_running_; }
    /// Back to mean 0, variance 1 and an epoch count of 0.
    void reset_running_stats();

    std::size_t features() const noexcept { return features_; }
    Tensor& gamma() noexcept { return gamma_; }
    Tensor& beta() noexcept { return beta_; }
    const Tensor& running_mean() const noexcept { return running_mean_; }
    const Tensor& running_var() const noexcept { return running_var_; }
    /// Number of train-mode updates folded into the running statistics.
    std::size_t epochs() const noexcept { return static_cast<std::size_t>(state_[0]); }
    /// Variance actually used at inference for feature f.
    double inference_variance(std::size_t f) const;

private:
    // Visits x as (outer, feature, inner) blocks.
    struct Layout {
        std::size_t outer;
        std::size_t inner;
    };
    Layout layout(const Tensor& x) const;

    std::size_t features_;
    BatchNormOptions options_;
    bool update_running_ = true;
    Tensor gamma_;
    Tensor beta_;
    Tensor dgamma_;
    Tensor dbeta_;
    Tensor running_mean_;
    Tensor running_var_;
    // state_[0] = epoch counter, state_[1] = values pooled per feature.
    Tensor state_;

    Mode last_mode_ = Mode::infer;
    Tensor x_hat_;
    Tensor inv_std_;
};

}  // namespace fcd::nn
