#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fcdcast/layer.hpp"

namespace fcd::nn {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double eta0 = 1e-3;
    /// Learning-rate decay exponent: eta <- exp(-alpha0) * eta after each step.
    double alpha0 = 0.0;
    /// Off: theta -= eta / sqrt(v + eps) * m on the raw moments.
    /// On: the same update on m / (1 - beta1^e) and v / (1 - beta2^e).
    bool bias_correction = false;
};

/// Adam with exponential learning-rate decay. Moments are matched to
/// parameters by position; the same parameter list must be passed each step.
class Adam {
public:
    explicit Adam(AdamConfig config = {});

    void step(std::span<const ParamRef> params);

    double learning_rate() const noexcept { return eta_; }
    std::size_t steps() const noexcept { return steps_; }
    const AdamConfig& config() const noexcept { return config_; }

    std::vector<Tensor>& first_moments() noexcept { return m_; }
    std::vector<Tensor>& second_moments() noexcept { return v_; }
    void restore(double eta, std::size_t steps, std::vector<Tensor> m, std::vector<Tensor> v);

private:
    AdamConfig config_;
    double eta_;
    std::size_t steps_ = 0;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

}  // namespace fcd::nn
