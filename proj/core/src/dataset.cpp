#include "fcdcast/dataset.hpp"

#include <algorithm>
#include <numeric>

#include "fcdcast/errors.hpp"

namespace fcd::training {

using features::Anchor;
using nn::Tensor;

Dataset::Dataset(const data::SpeedPanel& panel, features::FeatureSpec spec, models::Layout layout,
                 std::vector<Anchor> anchors)
    : panel_(&panel), spec_(spec), layout_(layout), anchors_(std::move(anchors)) {
    if (layout_ == models::Layout::image && spec_.mode != features::InputMode::full) {
        throw ValidationError("the image layout needs the full input");
    }
    const std::size_t t = layout_ == models::Layout::sequence ? steps() : 1;
    for (const auto& a : anchors_) {
        if (!features::sample_available(panel, spec_, a, t)) {
            throw ValidationError("anchor (" + std::to_string(a.edge) + ", " + std::to_string(a.slot) +
                                  ") is unavailable");
        }
    }
}

Tensor Dataset::inputs(std::span<const std::size_t> index) const {
    const std::size_t b = index.size();
    const std::size_t f = spec_.input_size();
    if (layout_ == models::Layout::sequence) {
        const std::size_t t = steps();
        Tensor x({b, t, f});
        for (std::size_t i = 0; i < b; ++i) {
            for (std::size_t tau = 0; tau < t; ++tau) {
                features::sequence_step_input(*panel_, spec_, anchors_.at(index[i]), tau, {},
                                              std::span<double>(x.data() + (i * t + tau) * f, f));
            }
        }
        return x;
    }
    Tensor x({b, f});
    for (std::size_t i = 0; i < b; ++i) {
        features::sequence_step_input(*panel_, spec_, anchors_.at(index[i]), 0, {},
                                      std::span<double>(x.data() + i * f, f));
    }
    if (layout_ == models::Layout::image) {
        const auto& s = spec_.full;
        Tensor img({b, s.df + 1, s.n0, s.bf});
        features::Sample sample;
        for (std::size_t i = 0; i < b; ++i) {
            sample.input.assign(x.data() + i * f, x.data() + (i + 1) * f);
            const Tensor one = features::to_cnn_tensor(sample, s);
            std::copy(one.data(), one.data() + one.size(), img.data() + i * one.size());
        }
        return img;
    }
    return x;
}

Tensor Dataset::flat_targets(std::span<const std::size_t> index) const {
    const std::size_t edges = spec_.target_edges();
    const std::size_t h = spec_.horizon();
    Tensor y({index.size(), edges * h});
    for (std::size_t i = 0; i < index.size(); ++i) {
        const Anchor a = anchors_.at(index[i]);
        for (std::size_t l = 0; l < edges; ++l) {
            const std::size_t e = panel_->ring_edge(a.edge, l);
            for (std::size_t k = 0; k < h; ++k) y[(i * edges + l) * h + k] = panel_->value(e, a.slot + k);
        }
    }
    return y;
}

Tensor Dataset::targets(std::span<const std::size_t> index) const {
    Tensor flat = flat_targets(index);
    if (layout_ != models::Layout::sequence) return flat;
    const std::size_t edges = spec_.target_edges();
    const std::size_t h = spec_.horizon();
    Tensor y({index.size(), h, edges});
    for (std::size_t i = 0; i < index.size(); ++i) {
        for (std::size_t l = 0; l < edges; ++l) {
            for (std::size_t k = 0; k < h; ++k) y[(i * h + k) * edges + l] = flat[(i * edges + l) * h + k];
        }
    }
    return y;
}

Dataset Dataset::subset(std::span<const std::size_t> index) const {
    std::vector<Anchor> picked;
    picked.reserve(index.size());
    for (std::size_t i : index) picked.push_back(anchors_.at(i));
    return Dataset(*panel_, spec_, layout_, std::move(picked));
}

Tensor predict(nn::Sequential& model, const Dataset& data, std::span<const std::size_t> index) {
    const auto& spec = data.spec();
    const std::size_t b = index.size();
    const std::size_t edges = spec.target_edges();
    const std::size_t h = spec.horizon();
    if (data.layout() != models::Layout::sequence) {
        Tensor out = model.forward(data.inputs(index), nn::Mode::infer);
        out.reshape({b, edges * h});
        return out;
    }
    const std::size_t f = spec.input_size();
    Tensor pred({b, edges * h});
    Tensor step({b, 1, f});
    model.reset_stream();
    for (std::size_t tau = 0; tau < h; ++tau) {
        for (std::size_t i = 0; i < b; ++i) {
            features::sequence_step_input(data.panel(), spec, data.anchors().at(index[i]), tau,
                                          std::span<const double>(pred.data() + i * edges * h, edges * h),
                                          std::span<double>(step.data() + i * f, f));
        }
        const Tensor y = model.stream(step);
        if (y.size() != b * edges) throw StructuralError("sequence head must emit one value per target edge");
        for (std::size_t i = 0; i < b; ++i) {
            for (std::size_t l = 0; l < edges; ++l) pred[(i * edges + l) * h + tau] = y[i * edges + l];
        }
    }
    model.reset_stream();
    return pred;
}

Tensor predict_all(nn::Sequential& model, const Dataset& data, std::size_t batch) {
    const std::size_t width = data.spec().target_edges() * data.spec().horizon();
    Tensor out({data.size(), width});
    const auto all = iota_index(data.size());
    for (std::size_t start = 0; start < data.size(); start += batch) {
        const std::size_t n = std::min(batch, data.size() - start);
        const Tensor part = predict(model, data, std::span<const std::size_t>(all).subspan(start, n));
        std::copy(part.data(), part.data() + part.size(), out.data() + start * width);
    }
    return out;
}

std::vector<std::size_t> iota_index(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
}

}  // namespace fcd::training
