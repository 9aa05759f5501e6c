#include "fcdcast/loss.hpp"

#include <cmath>

#include "fcdcast/errors.hpp"

namespace fcd::nn {

namespace {

void check(const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape()) {
        throw StructuralError("loss: prediction " + shape_string(pred.shape()) + " vs target " +
                              shape_string(target.shape()));
    }
    if (pred.rank() == 0 || pred.dim(0) == 0) throw StructuralError("loss: empty batch");
}

}  // namespace

double quadratic_loss(const Tensor& pred, const Tensor& target) {
    check(pred, target);
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        sum += d * d;
    }
    return sum / (2.0 * static_cast<double>(pred.dim(0)));
}

Tensor quadratic_loss_grad(const Tensor& pred, const Tensor& target) {
    check(pred, target);
    Tensor g(pred.shape());
    const double scale = 1.0 / static_cast<double>(pred.dim(0));
    for (std::size_t i = 0; i < pred.size(); ++i) g[i] = (pred[i] - target[i]) * scale;
    return g;
}

double elastic_net_penalty(std::span<const ParamRef> params, ElasticNet reg) {
    double l2 = 0.0;
    double l1 = 0.0;
    for (const auto& p : params) {
        if (!p.is_weight) continue;
        for (double w : p.value->values()) {
            l2 += w * w;
            l1 += std::abs(w);
        }
    }
    return 0.5 * reg.lambda_l2 * l2 + reg.lambda_l1 * l1;
}

void add_elastic_net_grad(std::span<const ParamRef> params, ElasticNet reg) {
    if (reg.lambda_l1 == 0.0 && reg.lambda_l2 == 0.0) return;
    for (const auto& p : params) {
        if (!p.is_weight) continue;
        auto w = p.value->values();
        auto g = p.grad->values();
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double sign = w[i] > 0.0 ? 1.0 : (w[i] < 0.0 ? -1.0 : 0.0);
            g[i] += reg.lambda_l2 * w[i] + reg.lambda_l1 * sign;
        }
    }
}

}  // namespace fcd::nn
