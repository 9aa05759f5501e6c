#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fcd {

using Rng = std::mt19937_64;

/// Derives an independent generator for a named purpose ("data", "init",
/// "shuffle", ...) from one master seed, so each can be varied separately.
Rng substream(std::uint64_t seed, std::string_view name);

/// Standard normal draw that does not depend on the standard library's
/// distribution implementation (Box-Muller on 53-bit uniforms).
double standard_normal(Rng& rng);
double uniform01(Rng& rng);

}  // namespace fcd
