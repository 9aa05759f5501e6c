#include "fcdcast/gradient_check.hpp"

#include <cmath>
#include <stdexcept>

#include "fcdcast/batch_norm.hpp"

namespace fcd::nn {

namespace {

class FreezeRunningStats {
public:
    explicit FreezeRunningStats(Sequential& model) {
        for (std::size_t i = 0; i < model.size(); ++i) {
            if (auto* bn = dynamic_cast<BatchNorm*>(&model.layer(i))) {
                saved_.emplace_back(bn, bn->update_running());
                bn->set_update_running(false);
            }
        }
    }
    ~FreezeRunningStats() {
        for (auto [bn, flag] : saved_) bn->set_update_running(flag);
    }
    FreezeRunningStats(const FreezeRunningStats&) = delete;
    FreezeRunningStats& operator=(const FreezeRunningStats&) = delete;

private:
    std::vector<std::pair<BatchNorm*, bool>> saved_;
};

double objective(Sequential& model, const Tensor& input, const Tensor& target, ElasticNet reg) {
    const Tensor pred = model.forward(input, Mode::train);
    const auto params = model.parameters();
    const double j = quadratic_loss(pred, target) + elastic_net_penalty(params, reg);
    if (!std::isfinite(j)) throw std::runtime_error("gradient check: non-finite loss");
    return j;
}

void record(GradientCheckReport& report, double analytic, double numeric, double floor, const std::string& name,
            std::size_t index) {
    const double abs_err = std::abs(analytic - numeric);
    const double rel = abs_err / std::max({std::abs(analytic), std::abs(numeric), floor});
    report.max_abs_error = std::max(report.max_abs_error, abs_err);
    if (rel >= report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_entry = name + "[" + std::to_string(index) + "]";
    }
    ++report.checked;
}

}  // namespace

GradientCheckReport gradient_check(Sequential& model, const Tensor& input, const Tensor& target,
                                   GradientCheckOptions options) {
    FreezeRunningStats freeze(model);
    GradientCheckReport report;

    model.zero_grad();
    const Tensor pred = model.forward(input, Mode::train);
    report.loss = quadratic_loss(pred, target) + elastic_net_penalty(model.parameters(), options.regularization);
    if (!std::isfinite(report.loss)) throw std::runtime_error("gradient check: non-finite loss");
    const Tensor dinput = model.backward(quadratic_loss_grad(pred, target));
    const auto params = model.parameters();
    add_elastic_net_grad(params, options.regularization);

    const double h = options.step;
    for (const auto& p : params) {
        auto w = p.value->values();
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double saved = w[i];
            w[i] = saved + h;
            const double up = objective(model, input, target, options.regularization);
            w[i] = saved - h;
            const double down = objective(model, input, target, options.regularization);
            w[i] = saved;
            record(report, (*p.grad)[i], (up - down) / (2.0 * h), options.floor, p.name, i);
        }
    }
    if (options.check_input) {
        Tensor x = input;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double saved = x[i];
            x[i] = saved + h;
            const double up = objective(model, x, target, options.regularization);
            x[i] = saved - h;
            const double down = objective(model, x, target, options.regularization);
            x[i] = saved;
            record(report, dinput[i], (up - down) / (2.0 * h), options.floor, "input", i);
        }
    }
    return report;
}

}  // namespace fcd::nn
