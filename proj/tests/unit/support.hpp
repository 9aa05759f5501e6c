#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "fcdcast/models.hpp"
#include "fcdcast/panel.hpp"
#include "fcdcast/rng.hpp"
#include "fcdcast/tensor.hpp"

namespace fcd::testing {

/// Panel with every slot valid, value = f(edge, slot), FFS 65.
inline data::SpeedPanel make_panel(std::size_t edges, std::size_t days,
                                   const std::function<double(std::size_t, std::size_t)>& f,
                                   std::size_t slots_per_day = data::kSlotsPerDay, double ffs = 65.0) {
    const std::size_t slots = days * slots_per_day;
    std::vector<double> values(edges * slots);
    for (std::size_t e = 0; e < edges; ++e) {
        for (std::size_t s = 0; s < slots; ++s) values[e * slots + s] = f(e, s);
    }
    return {edges, slots, slots_per_day, std::move(values), std::vector<std::uint8_t>(edges * slots, 1),
            std::vector<double>(edges, ffs)};
}

inline data::SpeedPanel constant_panel(std::size_t edges, std::size_t days, double c) {
    return make_panel(edges, days, [c](std::size_t, std::size_t) { return c; });
}

/// Copy with a list of (edge, slot) entries invalidated and set to `poison`.
inline data::SpeedPanel with_holes(const data::SpeedPanel& p, const std::vector<std::pair<std::size_t, std::size_t>>& holes,
                                   double poison) {
    std::vector<double> values(p.values().begin(), p.values().end());
    std::vector<std::uint8_t> mask(p.mask().begin(), p.mask().end());
    for (auto [e, s] : holes) {
        values[e * p.n_slots() + s] = poison;
        mask[e * p.n_slots() + s] = 0;
    }
    return {p.n_edges(), p.n_slots(), p.slots_per_day(), std::move(values), std::move(mask),
            std::vector<double>(p.free_flow().begin(), p.free_flow().end())};
}

/// Uniform integer in [lo, hi] for hand-rolled property generators.
inline std::size_t draw(Rng& rng, std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(hi - lo + 1)) % (hi - lo + 1);
}

inline double draw_real(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

inline nn::Tensor random_tensor(nn::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    nn::Tensor t(std::move(shape));
    for (double& v : t.values()) v = draw_real(rng, lo, hi);
    return t;
}

/// Uninitialized FNN-1: every weight is zero so it predicts 0 everywhere.
inline nn::Sequential zero_fnn(std::size_t in, std::size_t hidden, std::size_t out) {
    return models::build_fnn({in, hidden, 1, out});
}

}  // namespace fcd::testing
