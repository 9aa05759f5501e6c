#include "fcdcast/sequential.hpp"

#include "fcdcast/errors.hpp"

namespace fcd::nn {

Sequential::Sequential(const Sequential& other) {
    layers_.reserve(other.layers_.size());
    for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Sequential& Sequential::operator=(const Sequential& other) {
    if (this != &other) {
        Sequential copy(other);
        *this = std::move(copy);
    }
    return *this;
}

Tensor Sequential::forward(const Tensor& x, Mode mode) {
    Tensor h = x;
    for (auto& l : layers_) h = l->forward(h, mode);
    return h;
}

Tensor Sequential::backward(const Tensor& grad_out) {
    Tensor g = grad_out;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
}

void Sequential::zero_grad() {
    for (auto& p : parameters()) p.grad->fill(0.0);
}

void Sequential::reset_stream() {
    for (auto& l : layers_) l->reset_stream();
}

Tensor Sequential::stream(const Tensor& x) {
    Tensor h = x;
    for (auto& l : layers_) h = l->stream(h);
    return h;
}

Shape Sequential::output_shape(const Shape& input) const {
    Shape s = input;
    for (const auto& l : layers_) s = l->output_shape(s);
    return s;
}

std::vector<ParamRef> Sequential::parameters() {
    std::vector<ParamRef> out;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        for (auto p : layers_[i]->parameters()) {
            p.name = std::to_string(i) + "." + layers_[i]->kind() + "." + p.name;
            out.push_back(std::move(p));
        }
    }
    return out;
}

std::vector<BufferRef> Sequential::buffers() {
    std::vector<BufferRef> out;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        for (auto b : layers_[i]->buffers()) {
            b.name = std::to_string(i) + "." + layers_[i]->kind() + "." + b.name;
            out.push_back(std::move(b));
        }
    }
    return out;
}

std::vector<LayerWeightCount> Sequential::weight_counts() {
    std::vector<LayerWeightCount> out;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        LayerWeightCount c{i, layers_[i]->kind(), "", 0};
        for (const auto& p : layers_[i]->parameters()) {
            if (!p.is_weight) continue;
            if (!c.shapes.empty()) c.shapes += " ";
            c.shapes += shape_string(p.value->shape());
            c.weights += p.value->size();
        }
        if (c.weights > 0) out.push_back(std::move(c));
    }
    return out;
}

std::size_t Sequential::weight_count() {
    std::size_t n = 0;
    for (const auto& c : weight_counts()) n += c.weights;
    return n;
}

}  // namespace fcd::nn
