#include "fcdcast/layers.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "fcdcast/errors.hpp"

namespace fcd::nn {

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* where) {
    if (a.shape() != b.shape()) {
        throw StructuralError(std::string(where) + ": gradient shape " + shape_string(b.shape()) +
                              " does not match cached input " + shape_string(a.shape()));
    }
}

}  // namespace

// Dense ---------------------------------------------------------------------

Dense::Dense(std::size_t in, std::size_t out) : in_(in), out_(out), theta_({in, out}), grad_({in, out}) {
    if (in == 0 || out == 0) throw ValidationError("dense layer extents must be positive");
}

Shape Dense::output_shape(const Shape& input) const {
    if (input.empty() || input.back() != in_) {
        throw StructuralError("dense layer expects last extent " + std::to_string(in_) + ", got " +
                              shape_string(input));
    }
    Shape out = input;
    out.back() = out_;
    return out;
}

Tensor Dense::forward(const Tensor& x, Mode) {
    if (x.rank() < 2 || x.shape().back() != in_) {
        throw StructuralError("dense layer expects [..., " + std::to_string(in_) + "], got " +
                              shape_string(x.shape()));
    }
    input_ = x;
    const std::size_t rows = x.size() / in_;
    Shape out_shape = x.shape();
    out_shape.back() = out_;
    Tensor y(out_shape);
    matmul(x.values(), theta_.values(), y.values(), rows, in_, out_);
    return y;
}

Tensor Dense::backward(const Tensor& grad_out) {
    const std::size_t rows = input_.size() / in_;
    if (grad_out.size() != rows * out_) throw StructuralError("dense backward: gradient size mismatch");
    matmul_at_b_add(input_.values(), grad_out.values(), grad_.values(), in_, rows, out_);
    Tensor dx(input_.shape());
    matmul_a_bt(grad_out.values(), theta_.values(), dx.values(), rows, out_, in_);
    return dx;
}

std::vector<ParamRef> Dense::parameters() { return {{"theta", &theta_, &grad_, true}}; }

// Activations -----------------------------------------------------------------

double leaky_relu(double x, double slope) { return x >= 0.0 ? x : slope * x; }
double leaky_relu_grad(double x, double slope) { return x >= 0.0 ? 1.0 : slope; }

double output_clamp(double x) {
    if (x < 0.0) return 0.0;
    if (x > 1.0) return 1.0;
    return x;
}

double output_clamp_grad(double x) { return (x >= 0.0 && x <= 1.0) ? 1.0 : 0.0; }

Activation::Activation(ActivationKind kind, double slope) : kind_(kind), slope_(slope) {}

Tensor Activation::forward(const Tensor& x, Mode) {
    input_ = x;
    Tensor y(x.shape());
    if (kind_ == ActivationKind::leaky_relu) {
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = leaky_relu(x[i], slope_);
    } else {
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] >= 0.0 ? x[i] : std::expm1(x[i]);
    }
    return y;
}

Tensor Activation::backward(const Tensor& grad_out) {
    check_same_shape(input_, grad_out, "activation");
    Tensor dx(grad_out.shape());
    if (kind_ == ActivationKind::leaky_relu) {
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = grad_out[i] * leaky_relu_grad(input_[i], slope_);
    } else {
        for (std::size_t i = 0; i < dx.size(); ++i) {
            dx[i] = grad_out[i] * (input_[i] >= 0.0 ? 1.0 : std::exp(input_[i]));
        }
    }
    return dx;
}

Tensor OutputClamp::forward(const Tensor& x, Mode) {
    input_ = x;
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = output_clamp(x[i]);
    return y;
}

Tensor OutputClamp::backward(const Tensor& grad_out) {
    check_same_shape(input_, grad_out, "output clamp");
    Tensor dx(grad_out.shape());
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = grad_out[i] * output_clamp_grad(input_[i]);
    return dx;
}

Tensor Flatten::forward(const Tensor& x, Mode) {
    if (x.rank() < 1) throw StructuralError("flatten needs a batch axis");
    input_shape_ = x.shape();
    return x.reshaped({x.dim(0), x.size() / std::max<std::size_t>(x.dim(0), 1)});
}

Tensor Flatten::backward(const Tensor& grad_out) { return grad_out.reshaped(input_shape_); }

// Convolution -------------------------------------------------------------------

std::size_t window_output_extent(std::size_t extent, std::size_t receptive, std::size_t stride, std::size_t pad) {
    if (stride == 0 || receptive == 0) throw StructuralError("window receptive field and stride must be positive");
    const std::size_t padded = extent + 2 * pad;
    if (padded < receptive || (padded - receptive) % stride != 0) {
        throw StructuralError("window (R=" + std::to_string(receptive) + ", S=" + std::to_string(stride) +
                              ", P=" + std::to_string(pad) + ") does not tile extent " + std::to_string(extent));
    }
    return (padded - receptive) / stride + 1;
}

Conv2d::Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t receptive, std::size_t stride,
               std::size_t pad)
    : in_(in_channels),
      out_(out_channels),
      r_(receptive),
      stride_(stride),
      pad_(pad),
      theta_({out_channels, in_channels, receptive, receptive}),
      grad_({out_channels, in_channels, receptive, receptive}) {
    if (in_ == 0 || out_ == 0 || r_ == 0 || stride_ == 0) throw ValidationError("conv extents must be positive");
}

Shape Conv2d::output_shape(const Shape& input) const {
    if (input.size() != 3 || input[0] != in_) {
        throw StructuralError("conv2d expects [" + std::to_string(in_) + ", H, W], got " + shape_string(input));
    }
    return {out_, window_output_extent(input[1], r_, stride_, pad_), window_output_extent(input[2], r_, stride_, pad_)};
}

void Conv2d::im2col(const double* image, std::size_t h, std::size_t w, std::size_t oh, std::size_t ow,
                    std::vector<double>& cols) const {
    // cols is [(c, j, k) x (l, m)].
    const std::size_t positions = oh * ow;
    cols.assign(in_ * r_ * r_ * positions, 0.0);
    for (std::size_t c = 0; c < in_; ++c) {
        for (std::size_t j = 0; j < r_; ++j) {
            for (std::size_t k = 0; k < r_; ++k) {
                double* row = cols.data() + ((c * r_ + j) * r_ + k) * positions;
                for (std::size_t l = 0; l < oh; ++l) {
                    const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(stride_ * l + j) - static_cast<std::ptrdiff_t>(pad_);
                    if (y < 0 || y >= static_cast<std::ptrdiff_t>(h)) continue;
                    for (std::size_t m = 0; m < ow; ++m) {
                        const std::ptrdiff_t x =
                            static_cast<std::ptrdiff_t>(stride_ * m + k) - static_cast<std::ptrdiff_t>(pad_);
                        if (x < 0 || x >= static_cast<std::ptrdiff_t>(w)) continue;
                        row[l * ow + m] = image[(c * h + static_cast<std::size_t>(y)) * w + static_cast<std::size_t>(x)];
                    }
                }
            }
        }
    }
}

void Conv2d::col2im(const std::vector<double>& cols, std::size_t h, std::size_t w, std::size_t oh, std::size_t ow,
                    double* image) const {
    const std::size_t positions = oh * ow;
    for (std::size_t c = 0; c < in_; ++c) {
        for (std::size_t j = 0; j < r_; ++j) {
            for (std::size_t k = 0; k < r_; ++k) {
                const double* row = cols.data() + ((c * r_ + j) * r_ + k) * positions;
                for (std::size_t l = 0; l < oh; ++l) {
                    const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(stride_ * l + j) - static_cast<std::ptrdiff_t>(pad_);
                    if (y < 0 || y >= static_cast<std::ptrdiff_t>(h)) continue;
                    for (std::size_t m = 0; m < ow; ++m) {
                        const std::ptrdiff_t x =
                            static_cast<std::ptrdiff_t>(stride_ * m + k) - static_cast<std::ptrdiff_t>(pad_);
                        if (x < 0 || x >= static_cast<std::ptrdiff_t>(w)) continue;
                        image[(c * h + static_cast<std::size_t>(y)) * w + static_cast<std::size_t>(x)] += row[l * ow + m];
                    }
                }
            }
        }
    }
}

Tensor Conv2d::forward(const Tensor& x, Mode) {
    if (x.rank() != 4) throw StructuralError("conv2d expects [B, C, H, W], got " + shape_string(x.shape()));
    const Shape out_sample = output_shape({x.dim(1), x.dim(2), x.dim(3)});
    input_ = x;
    const std::size_t batch = x.dim(0), h = x.dim(2), w = x.dim(3);
    const std::size_t oh = out_sample[1], ow = out_sample[2];
    const std::size_t patch = in_ * r_ * r_;
    Tensor y({batch, out_, oh, ow});
    std::vector<double> cols;
    for (std::size_t b = 0; b < batch; ++b) {
        im2col(x.data() + b * in_ * h * w, h, w, oh, ow, cols);
        matmul(theta_.values(), cols, std::span<double>(y.data() + b * out_ * oh * ow, out_ * oh * ow), out_, patch,
               oh * ow);
    }
    return y;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
    const std::size_t batch = input_.dim(0), h = input_.dim(2), w = input_.dim(3);
    const std::size_t oh = grad_out.dim(2), ow = grad_out.dim(3);
    const std::size_t patch = in_ * r_ * r_;
    const std::size_t positions = oh * ow;
    Tensor dx(input_.shape());
    std::vector<double> cols;
    std::vector<double> dcols(patch * positions);
    std::vector<double> dtheta(out_ * patch);
    for (std::size_t b = 0; b < batch; ++b) {
        im2col(input_.data() + b * in_ * h * w, h, w, oh, ow, cols);
        std::span<const double> g(grad_out.data() + b * out_ * positions, out_ * positions);
        matmul_a_bt(g, cols, dtheta, out_, positions, patch);
        for (std::size_t i = 0; i < dtheta.size(); ++i) grad_[i] += dtheta[i];
        std::fill(dcols.begin(), dcols.end(), 0.0);
        matmul_at_b_add(theta_.values(), g, dcols, patch, out_, positions);
        col2im(dcols, h, w, oh, ow, dx.data() + b * in_ * h * w);
    }
    return dx;
}

std::vector<ParamRef> Conv2d::parameters() { return {{"theta", &theta_, &grad_, true}}; }

// Pooling -------------------------------------------------------------------------

MaxPool2d::MaxPool2d(std::size_t receptive, std::size_t stride) : r_(receptive), stride_(stride) {
    if (r_ == 0 || stride_ == 0) throw ValidationError("pooling extents must be positive");
}

Shape MaxPool2d::output_shape(const Shape& input) const {
    if (input.size() != 3) throw StructuralError("max pool expects [C, H, W], got " + shape_string(input));
    return {input[0], window_output_extent(input[1], r_, stride_, 0), window_output_extent(input[2], r_, stride_, 0)};
}

Tensor MaxPool2d::forward(const Tensor& x, Mode) {
    if (x.rank() != 4) throw StructuralError("max pool expects [B, C, H, W], got " + shape_string(x.shape()));
    const Shape out_sample = output_shape({x.dim(1), x.dim(2), x.dim(3)});
    input_shape_ = x.shape();
    const std::size_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::size_t oh = out_sample[1], ow = out_sample[2];
    Tensor y({x.dim(0), x.dim(1), oh, ow});
    argmax_.assign(y.size(), 0);
    for (std::size_t p = 0; p < planes; ++p) {
        const double* plane = x.data() + p * h * w;
        for (std::size_t l = 0; l < oh; ++l) {
            for (std::size_t m = 0; m < ow; ++m) {
                double best = -std::numeric_limits<double>::infinity();
                std::size_t best_at = 0;
                for (std::size_t j = 0; j < r_; ++j) {
                    for (std::size_t k = 0; k < r_; ++k) {
                        const std::size_t at = (stride_ * l + j) * w + stride_ * m + k;
                        if (plane[at] > best) {
                            best = plane[at];
                            best_at = at;
                        }
                    }
                }
                const std::size_t o = (p * oh + l) * ow + m;
                y[o] = best;
                argmax_[o] = p * h * w + best_at;
            }
        }
    }
    return y;
}

Tensor MaxPool2d::backward(const Tensor& grad_out) {
    if (grad_out.size() != argmax_.size()) throw StructuralError("max pool backward: gradient size mismatch");
    Tensor dx(input_shape_);
    for (std::size_t o = 0; o < argmax_.size(); ++o) dx[argmax_[o]] += grad_out[o];
    return dx;
}

}  // namespace fcd::nn
