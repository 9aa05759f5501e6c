#pragma once

#include <cstddef>
#include <vector>

#include "fcdcast/layer.hpp"
#include "fcdcast/rng.hpp"

namespace fcd::nn {

/// Weight averaging without bias: y = x * theta over the last axis,
/// theta is [in x out].
class Dense final : public Layer {
public:
    Dense(std::size_t in, std::size_t out);

    std::string kind() const override { return "dense"; }
    Shape output_shape(const Shape& input) const override;
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<ParamRef> parameters() override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Dense>(*this); }

    std::size_t in() const noexcept { return in_; }
    std::size_t out() const noexcept { return out_; }
    Tensor& theta() noexcept { return theta_; }
    const Tensor& theta() const noexcept { return theta_; }

private:
    std::size_t in_;
    std::size_t out_;
    Tensor theta_;
    Tensor grad_;
    Tensor input_;
};

enum class ActivationKind { leaky_relu, elu };

double leaky_relu(double x, double slope = 0.01);
double leaky_relu_grad(double x, double slope = 0.01);
/// o(x): 0 below 0, x on [0, 1], 1 above 1.
double output_clamp(double x);
/// Subgradient 1 on the closed interval [0, 1].
double output_clamp_grad(double x);

class Activation final : public Layer {
public:
    explicit Activation(ActivationKind kind = ActivationKind::leaky_relu, double slope = 0.01);

    std::string kind() const override { return kind_ == ActivationKind::elu ? "elu" : "leaky_relu"; }
    Shape output_shape(const Shape& input) const override { return input; }
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Activation>(*this); }

private:
    ActivationKind kind_;
    double slope_;
    Tensor input_;
};

class OutputClamp final : public Layer {
public:
    std::string kind() const override { return "output_clamp"; }
    Shape output_shape(const Shape& input) const override { return input; }
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<OutputClamp>(*this); }

private:
    Tensor input_;
};

/// [B, ...] -> [B, prod(...)].
class Flatten final : public Layer {
public:
    std::string kind() const override { return "flatten"; }
    Shape output_shape(const Shape& input) const override { return {shape_size(input)}; }
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Flatten>(*this); }

private:
    Shape input_shape_;
};

/// Output extent of a sliding window; throws StructuralError unless
/// (extent + 2 * pad - receptive) is a non-negative multiple of stride.
std::size_t window_output_extent(std::size_t extent, std::size_t receptive, std::size_t stride, std::size_t pad);

/// Cross-correlation on [B, C, H, W] with a [out, in, R, R] kernel, no bias.
class Conv2d final : public Layer {
public:
    Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t receptive = 3, std::size_t stride = 1,
           std::size_t pad = 1);

    std::string kind() const override { return "conv2d"; }
    Shape output_shape(const Shape& input) const override;
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<ParamRef> parameters() override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv2d>(*this); }

    Tensor& theta() noexcept { return theta_; }
    std::size_t in_channels() const noexcept { return in_; }
    std::size_t out_channels() const noexcept { return out_; }
    std::size_t receptive() const noexcept { return r_; }

private:
    void im2col(const double* image, std::size_t h, std::size_t w, std::size_t oh, std::size_t ow,
                std::vector<double>& cols) const;
    void col2im(const std::vector<double>& cols, std::size_t h, std::size_t w, std::size_t oh, std::size_t ow,
                double* image) const;

    std::size_t in_;
    std::size_t out_;
    std::size_t r_;
    std::size_t stride_;
    std::size_t pad_;
    Tensor theta_;
    Tensor grad_;
    Tensor input_;
};

class MaxPool2d final : public Layer {
public:
    explicit MaxPool2d(std::size_t receptive = 2, std::size_t stride = 2);

    std::string kind() const override { return "max_pool2d"; }
    Shape output_shape(const Shape& input) const override;
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<MaxPool2d>(*this); }

private:
    std::size_t r_;
    std::size_t stride_;
    Shape input_shape_;
    std::vector<std::size_t> argmax_;
};

}  // namespace fcd::nn
