#pragma once

#include <cstdint>

#include "fcdcast/gradient_check.hpp"
#include "fcdcast/models.hpp"

namespace fcd::models {

/// A small instance of one model family with a random batch, sized so that a
/// full finite-difference sweep takes milliseconds.
struct ToyCase {
    nn::Sequential model;
    nn::Tensor input;
    nn::Tensor target;
    nn::GradientCheckOptions options;
};

/// Parameters are drawn so that no output sits on a clamp kink: the last
/// batch norm shifts its features well inside the head's linear range.
ToyCase make_toy_case(ModelKind kind, std::uint64_t seed);

}  // namespace fcd::models
