#include "fcdcast/lstm.hpp"

#include <cmath>
#include <string>

#include "fcdcast/errors.hpp"

namespace fcd::nn {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

namespace {

constexpr std::array<const char*, Lstm::kGates> kGateNames = {"i", "f", "o", "g"};

}  // namespace

Lstm::Lstm(std::size_t in, std::size_t hidden) : in_(in), hidden_(hidden) {
    if (in == 0 || hidden == 0) throw ValidationError("lstm extents must be positive");
    for (std::size_t g = 0; g < kGates; ++g) {
        wx_[g] = Tensor({in, hidden});
        wh_[g] = Tensor({hidden, hidden});
        dwx_[g] = Tensor({in, hidden});
        dwh_[g] = Tensor({hidden, hidden});
    }
}

Shape Lstm::output_shape(const Shape& input) const {
    if (input.size() != 2 || input[1] != in_) {
        throw StructuralError("lstm expects [T, " + std::to_string(in_) + "], got " + shape_string(input));
    }
    return {input[0], hidden_};
}

Tensor Lstm::run(const Tensor& x, std::vector<double>& h, std::vector<double>& c, bool cache) {
    if (x.rank() != 3 || x.dim(2) != in_) {
        throw StructuralError("lstm expects [B, T, " + std::to_string(in_) + "], got " + shape_string(x.shape()));
    }
    const std::size_t batch = x.dim(0), steps = x.dim(1), H = hidden_;
    Tensor out({batch, steps, H});
    if (cache) {
        for (auto& g : gates_) g = Tensor({batch, steps, H});
        cell_ = Tensor({batch, steps, H});
    }
    std::array<std::vector<double>, kGates> pre;
    for (auto& p : pre) p.assign(batch * H, 0.0);
    std::vector<double> xt(batch * in_);
    std::vector<double> tmp(batch * H);
    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t b = 0; b < batch; ++b) {
            std::copy_n(x.data() + (b * steps + t) * in_, in_, xt.data() + b * in_);
        }
        for (std::size_t g = 0; g < kGates; ++g) {
            matmul(xt, wx_[g].values(), pre[g], batch, in_, H);
            matmul(h, wh_[g].values(), tmp, batch, H, H);
            for (std::size_t k = 0; k < batch * H; ++k) pre[g][k] += tmp[k];
        }
        for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t j = 0; j < H; ++j) {
                const std::size_t k = b * H + j;
                const double ig = sigmoid(pre[input_gate][k]);
                const double fg = sigmoid(pre[forget_gate][k]);
                const double og = sigmoid(pre[output_gate][k]);
                const double gg = std::tanh(pre[cell_gate][k]);
                c[k] = fg * c[k] + ig * gg;
                h[k] = og * std::tanh(c[k]);
                const std::size_t o = (b * steps + t) * H + j;
                out[o] = h[k];
                if (cache) {
                    gates_[input_gate][o] = ig;
                    gates_[forget_gate][o] = fg;
                    gates_[output_gate][o] = og;
                    gates_[cell_gate][o] = gg;
                    cell_[o] = c[k];
                }
            }
        }
    }
    return out;
}

Tensor Lstm::forward(const Tensor& x, Mode) {
    input_ = x;
    std::vector<double> h(x.rank() == 3 ? x.dim(0) * hidden_ : 0, 0.0);
    std::vector<double> c(h.size(), 0.0);
    hidden_out_ = run(x, h, c, true);
    return hidden_out_;
}

void Lstm::reset_stream() {
    stream_h_.clear();
    stream_c_.clear();
}

Tensor Lstm::stream(const Tensor& x) {
    if (x.rank() != 3) throw StructuralError("lstm stream expects [B, T, F]");
    if (stream_h_.size() != x.dim(0) * hidden_) {
        stream_h_.assign(x.dim(0) * hidden_, 0.0);
        stream_c_.assign(x.dim(0) * hidden_, 0.0);
    }
    return run(x, stream_h_, stream_c_, false);
}

Tensor Lstm::backward(const Tensor& grad_out) {
    if (grad_out.shape() != hidden_out_.shape()) throw StructuralError("lstm backward: gradient shape mismatch");
    const std::size_t batch = input_.dim(0), steps = input_.dim(1), H = hidden_;
    Tensor dx(input_.shape());
    std::vector<double> dh_next(batch * H, 0.0);
    std::vector<double> dc_next(batch * H, 0.0);
    std::array<std::vector<double>, kGates> da;
    for (auto& d : da) d.assign(batch * H, 0.0);
    std::vector<double> xt(batch * in_);
    std::vector<double> hprev(batch * H);
    std::vector<double> dxt(batch * in_);
    std::vector<double> dh_tmp(batch * H);
    std::vector<double> dx_tmp(batch * in_);

    for (std::size_t t = steps; t-- > 0;) {
        for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t j = 0; j < H; ++j) {
                const std::size_t k = b * H + j;
                const std::size_t o = (b * steps + t) * H + j;
                const double ig = gates_[input_gate][o];
                const double fg = gates_[forget_gate][o];
                const double og = gates_[output_gate][o];
                const double gg = gates_[cell_gate][o];
                const double tc = std::tanh(cell_[o]);
                const double cprev = t > 0 ? cell_[o - H] : 0.0;
                const double dh = grad_out[o] + dh_next[k];
                const double dc = dh * og * (1.0 - tc * tc) + dc_next[k];
                da[input_gate][k] = dc * gg * ig * (1.0 - ig);
                da[forget_gate][k] = dc * cprev * fg * (1.0 - fg);
                da[output_gate][k] = dh * tc * og * (1.0 - og);
                da[cell_gate][k] = dc * ig * (1.0 - gg * gg);
                dc_next[k] = dc * fg;
                hprev[k] = t > 0 ? hidden_out_[o - H] : 0.0;
            }
            std::copy_n(input_.data() + (b * steps + t) * in_, in_, xt.data() + b * in_);
        }
        std::fill(dxt.begin(), dxt.end(), 0.0);
        std::fill(dh_next.begin(), dh_next.end(), 0.0);
        for (std::size_t g = 0; g < kGates; ++g) {
            matmul_at_b_add(xt, da[g], dwx_[g].values(), in_, batch, H);
            matmul_at_b_add(hprev, da[g], dwh_[g].values(), H, batch, H);
            matmul_a_bt(da[g], wx_[g].values(), dx_tmp, batch, H, in_);
            for (std::size_t k = 0; k < dxt.size(); ++k) dxt[k] += dx_tmp[k];
            matmul_a_bt(da[g], wh_[g].values(), dh_tmp, batch, H, H);
            for (std::size_t k = 0; k < dh_next.size(); ++k) dh_next[k] += dh_tmp[k];
        }
        for (std::size_t b = 0; b < batch; ++b) {
            std::copy_n(dxt.data() + b * in_, in_, dx.data() + (b * steps + t) * in_);
        }
    }
    return dx;
}

std::vector<ParamRef> Lstm::parameters() {
    std::vector<ParamRef> out;
    for (std::size_t g = 0; g < kGates; ++g) {
        out.push_back({std::string("theta_x_") + kGateNames[g], &wx_[g], &dwx_[g], true});
    }
    for (std::size_t g = 0; g < kGates; ++g) {
        out.push_back({std::string("theta_h_") + kGateNames[g], &wh_[g], &dwh_[g], true});
    }
    return out;
}

}  // namespace fcd::nn
