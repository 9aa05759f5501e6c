#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fcdcast/tensor.hpp"

namespace fcd::nn {

enum class Mode { train, infer };

/// A trainable tensor and its gradient, owned by a layer.
struct ParamRef {
    std::string name;
    Tensor* value = nullptr;
    Tensor* grad = nullptr;
    /// Weight matrices carry the elastic-net penalty and count as weights;
    /// batch-norm scale and shift do not.
    bool is_weight = true;
};

/// Non-trainable persistent state (batch-norm running statistics).
struct BufferRef {
    std::string name;
    Tensor* value = nullptr;
};

/// Batched layer. Inputs carry the batch on axis 0. `backward` must follow
/// the matching `forward`; it accumulates parameter gradients and returns the
/// gradient with respect to the input.
class Layer {
public:
    virtual ~Layer() = default;

    virtual std::string kind() const = 0;
    /// Output extents for one sample (no batch axis).
    virtual Shape output_shape(const Shape& input) const = 0;
    virtual Tensor forward(const Tensor& x, Mode mode) = 0;
    virtual Tensor backward(const Tensor& grad_out) = 0;
    virtual std::vector<ParamRef> parameters() { return {}; }
    virtual std::vector<BufferRef> buffers() { return {}; }
    virtual std::unique_ptr<Layer> clone() const = 0;

    /// Step-at-a-time inference for recurrent stacks. Stateless layers just
    /// run their inference forward on the [B, 1, ...] slice.
    virtual void reset_stream() {}
    virtual Tensor stream(const Tensor& x) { return forward(x, Mode::infer); }
};

}  // namespace fcd::nn
