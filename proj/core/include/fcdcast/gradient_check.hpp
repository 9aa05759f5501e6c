#pragma once

#include <cstddef>
#include <string>

#include "fcdcast/loss.hpp"
#include "fcdcast/sequential.hpp"

namespace fcd::nn {

struct GradientCheckOptions {
    double step = 1e-5;
    ElasticNet regularization{};
    /// Also compare dLoss/dInput.
    bool check_input = false;
    /// Relative errors divide by max(|analytic|, |numeric|, floor) so that
    /// entries whose true gradient is ~0 are judged on absolute error.
    double floor = 1e-7;
};

struct GradientCheckReport {
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    std::string worst_entry;
    std::size_t checked = 0;
    double loss = 0.0;

    bool passed(double tolerance) const { return max_rel_error < tolerance; }
};

/// Compares backpropagated gradients of J_reg with central finite
/// differences at every parameter entry. Batch-norm running statistics are
/// frozen for the duration. Throws std::runtime_error on a non-finite loss.
GradientCheckReport gradient_check(Sequential& model, const Tensor& input, const Tensor& target,
                                   GradientCheckOptions options = {});

}  // namespace fcd::nn
