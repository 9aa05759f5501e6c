#pragma once

#include <span>

#include "fcdcast/layer.hpp"

namespace fcd::nn {

/// J = 1 / (2 B) * sum over every entry of (pred - target)^2, B = pred.dim(0).
double quadratic_loss(const Tensor& pred, const Tensor& target);
/// dJ/dpred.
Tensor quadratic_loss_grad(const Tensor& pred, const Tensor& target);

struct ElasticNet {
    double lambda_l1 = 0.0;
    double lambda_l2 = 0.0;
};

/// (lambda_l2 / 2) sum theta^2 + lambda_l1 sum |theta| over weight parameters.
double elastic_net_penalty(std::span<const ParamRef> params, ElasticNet reg);
/// Adds lambda_l2 * theta + lambda_l1 * sign(theta) to each weight gradient,
/// with sign(0) = 0.
void add_elastic_net_grad(std::span<const ParamRef> params, ElasticNet reg);

}  // namespace fcd::nn
