#include "fcdcast/adam.hpp"

#include <cmath>

#include "fcdcast/errors.hpp"

namespace fcd::nn {

Adam::Adam(AdamConfig config) : config_(config), eta_(config.eta0) {}

void Adam::step(std::span<const ParamRef> params) {
    if (m_.empty()) {
        for (const auto& p : params) {
            m_.emplace_back(p.value->shape());
            v_.emplace_back(p.value->shape());
        }
    }
    if (m_.size() != params.size()) throw StructuralError("adam: parameter list changed between steps");
    ++steps_;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double c1 = config_.bias_correction ? 1.0 - std::pow(b1, static_cast<double>(steps_)) : 1.0;
    const double c2 = config_.bias_correction ? 1.0 - std::pow(b2, static_cast<double>(steps_)) : 1.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto w = params[k].value->values();
        auto g = params[k].grad->values();
        auto m = m_[k].values();
        auto v = v_[k].values();
        if (w.size() != m.size()) throw StructuralError("adam: moment shape does not match " + params[k].name);
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            w[i] -= eta_ / std::sqrt(v[i] / c2 + config_.epsilon) * (m[i] / c1);
        }
    }
    eta_ *= std::exp(-config_.alpha0);
}

void Adam::restore(double eta, std::size_t steps, std::vector<Tensor> m, std::vector<Tensor> v) {
    if (m.size() != v.size()) throw StructuralError("adam: moment lists differ in length");
    eta_ = eta;
    steps_ = steps;
    m_ = std::move(m);
    v_ = std::move(v);
}

}  // namespace fcd::nn
