#include "fcdcast/batch_norm.hpp"

#include <cmath>
#include <string>

#include "fcdcast/errors.hpp"

namespace fcd::nn {

BatchNorm::BatchNorm(std::size_t features, BatchNormOptions options)
    : features_(features),
      options_(options),
      gamma_({features}, 1.0),
      beta_({features}, 0.0),
      dgamma_({features}),
      dbeta_({features}),
      running_mean_({features}, 0.0),
      running_var_({features}, 1.0),
      state_({2}, 0.0) {
    if (features == 0) throw ValidationError("batch norm needs at least one feature");
}

BatchNorm::Layout BatchNorm::layout(const Tensor& x) const {
    if (x.rank() == 4) {
        if (x.dim(1) != features_) {
            throw StructuralError("batch norm expects " + std::to_string(features_) + " channels, got " +
                                  shape_string(x.shape()));
        }
        return {x.dim(0), x.dim(2) * x.dim(3)};
    }
    if (x.rank() < 2 || x.shape().back() != features_) {
        throw StructuralError("batch norm expects [..., " + std::to_string(features_) + "], got " +
                              shape_string(x.shape()));
    }
    return {x.size() / features_, 1};
}

double BatchNorm::inference_variance(std::size_t f) const {
    const double n = state_[1];
    const double correction = n > 1.0 ? n / (n - 1.0) : 1.0;
    return correction * running_var_[f];
}

void BatchNorm::reset_running_stats() {
    running_mean_.fill(0.0);
    running_var_.fill(1.0);
    state_.fill(0.0);
}

Tensor BatchNorm::forward(const Tensor& x, Mode mode) {
    const auto [outer, inner] = layout(x);
    const std::size_t n = outer * inner;
    last_mode_ = mode;
    Tensor y(x.shape());
    x_hat_ = Tensor(x.shape());
    inv_std_ = Tensor({features_});
    auto at = [&](std::size_t o, std::size_t f, std::size_t i) { return (o * features_ + f) * inner + i; };

    if (mode == Mode::infer) {
        for (std::size_t f = 0; f < features_; ++f) {
            inv_std_[f] = 1.0 / std::sqrt(inference_variance(f) + options_.epsilon);
        }
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t f = 0; f < features_; ++f) {
                for (std::size_t i = 0; i < inner; ++i) {
                    const std::size_t k = at(o, f, i);
                    x_hat_[k] = (x[k] - running_mean_[f]) * inv_std_[f];
                    y[k] = gamma_[f] * x_hat_[k] + beta_[f];
                }
            }
        }
        return y;
    }

    if (x.dim(0) < 2) throw ValidationError("batch norm in train mode needs a mini-batch of at least 2");
    const double count = static_cast<double>(n);
    for (std::size_t f = 0; f < features_; ++f) {
        double mean = 0.0;
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t i = 0; i < inner; ++i) mean += x[at(o, f, i)];
        }
        mean /= count;
        double var = 0.0;
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t i = 0; i < inner; ++i) {
                const double d = x[at(o, f, i)] - mean;
                var += d * d;
            }
        }
        var /= count;
        inv_std_[f] = 1.0 / std::sqrt(var + options_.epsilon);
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t i = 0; i < inner; ++i) {
                const std::size_t k = at(o, f, i);
                x_hat_[k] = (x[k] - mean) * inv_std_[f];
                y[k] = gamma_[f] * x_hat_[k] + beta_[f];
            }
        }
        if (update_running_) {
            if (options_.running == RunningStats::cumulative) {
                const double e = state_[0];
                running_mean_[f] = (e * running_mean_[f] + mean) / (e + 1.0);
                running_var_[f] = (e * running_var_[f] + var) / (e + 1.0);
            } else {
                const double mu = options_.momentum;
                running_mean_[f] = (1.0 - mu) * running_mean_[f] + mu * mean;
                running_var_[f] = (1.0 - mu) * running_var_[f] + mu * var;
            }
        }
    }
    if (update_running_) {
        state_[0] += 1.0;
        state_[1] = count;
    }
    return y;
}

Tensor BatchNorm::backward(const Tensor& grad_out) {
    if (grad_out.shape() != x_hat_.shape()) throw StructuralError("batch norm backward: gradient shape mismatch");
    const auto [outer, inner] = layout(grad_out);
    auto at = [&](std::size_t o, std::size_t f, std::size_t i) { return (o * features_ + f) * inner + i; };
    Tensor dx(grad_out.shape());
    const double count = static_cast<double>(outer * inner);
    for (std::size_t f = 0; f < features_; ++f) {
        double sum_dy = 0.0;
        double sum_dy_xhat = 0.0;
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t i = 0; i < inner; ++i) {
                const std::size_t k = at(o, f, i);
                sum_dy += grad_out[k];
                sum_dy_xhat += grad_out[k] * x_hat_[k];
            }
        }
        dgamma_[f] += sum_dy_xhat;
        dbeta_[f] += sum_dy;
        const double g = gamma_[f] * inv_std_[f];
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t i = 0; i < inner; ++i) {
                const std::size_t k = at(o, f, i);
                if (last_mode_ == Mode::infer) {
                    dx[k] = g * grad_out[k];
                } else {
                    dx[k] = g * (grad_out[k] - sum_dy / count - x_hat_[k] * sum_dy_xhat / count);
                }
            }
        }
    }
    return dx;
}

std::vector<ParamRef> BatchNorm::parameters() {
    return {{"gamma", &gamma_, &dgamma_, false}, {"beta", &beta_, &dbeta_, false}};
}

std::vector<BufferRef> BatchNorm::buffers() {
    return {{"running_mean", &running_mean_}, {"running_var", &running_var_}, {"state", &state_}};
}

}  // namespace fcd::nn
