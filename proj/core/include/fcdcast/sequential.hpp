#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "fcdcast/layer.hpp"

namespace fcd::nn {

struct LayerWeightCount {
    std::size_t index = 0;
    std::string kind;
    std::string shapes;
    std::size_t weights = 0;
};

/// Layer stack owning its parameters. Copyable (deep copy).
class Sequential {
public:
    Sequential() = default;
    Sequential(const Sequential& other);
    Sequential& operator=(const Sequential& other);
    Sequential(Sequential&&) noexcept = default;
    Sequential& operator=(Sequential&&) noexcept = default;

    template <typename L, typename... Args>
    L& add(Args&&... args) {
        auto layer = std::make_unique<L>(std::forward<Args>(args)...);
        L& ref = *layer;
        layers_.push_back(std::move(layer));
        return ref;
    }
    void push(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

    Tensor forward(const Tensor& x, Mode mode);
    /// Backpropagates dLoss/dOutput; returns dLoss/dInput.
    Tensor backward(const Tensor& grad_out);
    void zero_grad();

    /// Step-at-a-time inference (recurrent stacks).
    void reset_stream();
    Tensor stream(const Tensor& x);

    /// Per-sample output extents for a per-sample input shape.
    Shape output_shape(const Shape& input) const;

    /// Names are "<layer index>.<layer kind>.<param>".
    std::vector<ParamRef> parameters();
    std::vector<BufferRef> buffers();

    std::vector<LayerWeightCount> weight_counts();
    std::size_t weight_count();

    std::size_t size() const noexcept { return layers_.size(); }
    Layer& layer(std::size_t i) { return *layers_.at(i); }
    const Layer& layer(std::size_t i) const { return *layers_.at(i); }

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

}  // namespace fcd::nn
