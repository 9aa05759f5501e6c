#include "fcdcast/panel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fcdcast/errors.hpp"
#include "fcdcast/rng.hpp"

namespace fcd::data {

SpeedPanel::SpeedPanel(std::size_t n_edges, std::size_t n_slots, std::size_t slots_per_day,
                       std::vector<double> values, std::vector<std::uint8_t> valid,
                       std::vector<double> free_flow)
    : n_edges_(n_edges),
      n_slots_(n_slots),
      slots_per_day_(slots_per_day),
      values_(std::move(values)),
      valid_(std::move(valid)),
      free_flow_(std::move(free_flow)) {
    if (slots_per_day_ == 0) throw ValidationError("slots_per_day must be positive");
    if (values_.size() != n_edges_ * n_slots_ || valid_.size() != n_edges_ * n_slots_) {
        throw StructuralError("panel buffers do not match " + std::to_string(n_edges_) + " x " +
                              std::to_string(n_slots_));
    }
    if (free_flow_.size() != n_edges_) throw StructuralError("free-flow vector length must equal edge count");
    invalid_prefix_.assign(n_edges_ * (n_slots_ + 1), 0);
    for (std::size_t e = 0; e < n_edges_; ++e) {
        std::uint32_t* prefix = invalid_prefix_.data() + e * (n_slots_ + 1);
        for (std::size_t s = 0; s < n_slots_; ++s) {
            std::size_t i = e * n_slots_ + s;
            if (valid_[i] && (!std::isfinite(values_[i]) || values_[i] < 0.0)) {
                throw ValidationError("valid panel entry at edge " + std::to_string(e) + ", slot " +
                                      std::to_string(s) + " is negative or non-finite");
            }
            prefix[s + 1] = prefix[s] + (valid_[i] ? 0u : 1u);
        }
    }
}

bool SpeedPanel::range_valid(std::size_t edge, std::int64_t lo, std::int64_t hi) const {
    if (lo < 0 || hi < lo || hi >= static_cast<std::int64_t>(n_slots_) || edge >= n_edges_) return false;
    const std::uint32_t* prefix = invalid_prefix_.data() + edge * (n_slots_ + 1);
    return prefix[hi + 1] == prefix[lo];
}

bool SpeedPanel::operator==(const SpeedPanel& other) const {
    return n_edges_ == other.n_edges_ && n_slots_ == other.n_slots_ &&
           slots_per_day_ == other.slots_per_day_ && values_ == other.values_ && valid_ == other.valid_ &&
           free_flow_ == other.free_flow_;
}

SpeedPanel load_panel(std::span<const RawObservation> observations, std::span<const double> free_flow,
                      std::size_t slots_per_day) {
    const std::size_t n_edges = free_flow.size();
    if (n_edges == 0) throw ValidationError("free-flow table is empty");
    for (std::size_t e = 0; e < n_edges; ++e) {
        if (!(free_flow[e] > 0.0) || !std::isfinite(free_flow[e])) {
            throw ValidationError("free-flow speed of edge " + std::to_string(e) + " must be positive");
        }
    }
    std::size_t max_slot = 0;
    for (const auto& obs : observations) {
        if (obs.edge_id >= n_edges) {
            throw StructuralError("edge_id " + std::to_string(obs.edge_id) + " out of range for " +
                                  std::to_string(n_edges) + " edges");
        }
        if (!(obs.speed_kph >= 0.0) || !std::isfinite(obs.speed_kph)) {
            throw ValidationError("speed at edge " + std::to_string(obs.edge_id) + ", slot " +
                                  std::to_string(obs.slot) + " must be finite and non-negative");
        }
        max_slot = std::max(max_slot, obs.slot);
    }
    const std::size_t n_days = observations.empty() ? 1 : max_slot / slots_per_day + 1;
    const std::size_t n_slots = n_days * slots_per_day;
    std::vector<double> values(n_edges * n_slots, 0.0);
    std::vector<std::uint8_t> valid(n_edges * n_slots, 0);
    for (const auto& obs : observations) {
        const std::size_t i = obs.edge_id * n_slots + obs.slot;
        values[i] = obs.speed_kph / free_flow[obs.edge_id];
        valid[i] = 1;
    }
    return SpeedPanel(n_edges, n_slots, slots_per_day, std::move(values), std::move(valid),
                      {free_flow.begin(), free_flow.end()});
}

namespace {

bool in_night(std::size_t time_of_day, std::size_t slots_per_day, int start_hour, int end_hour) {
    // Compare in slot units so that the boundaries land exactly on slots.
    const std::size_t start = static_cast<std::size_t>(start_hour) * slots_per_day / 24;
    const std::size_t end = static_cast<std::size_t>(end_hour) * slots_per_day / 24;
    if (start == end) return false;
    if (start < end) return time_of_day >= start && time_of_day < end;
    return time_of_day >= start || time_of_day < end;
}

}  // namespace

SpeedPanel mask_night_hours(const SpeedPanel& panel, int start_hour, int end_hour) {
    if (start_hour < 0 || start_hour >= 24 || end_hour < 0 || end_hour >= 24) {
        throw ValidationError("night hours must lie in [0, 24)");
    }
    std::vector<std::uint8_t> valid(panel.mask().begin(), panel.mask().end());
    const std::size_t spd = panel.slots_per_day();
    for (std::size_t e = 0; e < panel.n_edges(); ++e) {
        for (std::size_t s = 0; s < panel.n_slots(); ++s) {
            if (in_night(s % spd, spd, start_hour, end_hour)) valid[e * panel.n_slots() + s] = 0;
        }
    }
    return SpeedPanel(panel.n_edges(), panel.n_slots(), spd, {panel.values().begin(), panel.values().end()},
                      std::move(valid), {panel.free_flow().begin(), panel.free_flow().end()});
}

SpeedPanel mask_night_hours(SpeedPanel&& panel, int start_hour, int end_hour) {
    return mask_night_hours(static_cast<const SpeedPanel&>(panel), start_hour, end_hour);
}

PanelSplit chronological_split(const SpeedPanel& panel, double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ValidationError("train_fraction must lie in (0, 1)");
    }
    const std::size_t days = panel.n_days();
    if (days < 2) throw ValidationError("chronological split needs at least 2 days");
    auto boundary = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(days)));
    boundary = std::clamp<std::size_t>(boundary, 1, days - 1);
    const std::size_t cut = boundary * panel.slots_per_day();
    return PanelSplit{PanelView{&panel, {0, cut}}, PanelView{&panel, {cut, panel.n_slots()}}, boundary};
}

namespace {

double bump(double hour, double centre, double width) {
    const double z = (hour - centre) / width;
    return std::exp(-0.5 * z * z);
}

}  // namespace

SpeedPanel generate_synthetic(const SyntheticConfig& cfg) {
    if (cfg.n_edges < 1) throw ValidationError("synthetic panel needs at least one edge");
    if (cfg.n_days < 9) throw ValidationError("synthetic panel needs at least 9 days");
    if (!(cfg.congestion_amplitude >= 0.0 && cfg.congestion_amplitude <= 1.0)) {
        throw ValidationError("congestion_amplitude must lie in [0, 1]");
    }
    if (!(cfg.noise_std >= 0.0)) throw ValidationError("noise_std must be non-negative");

    constexpr double kMorningCentre = 8.0;
    constexpr double kMorningWidth = 0.9;
    constexpr double kEveningCentre = 18.0;
    constexpr double kEveningWidth = 1.1;
    constexpr double kEveningStrength = 0.85;
    constexpr double kQuietDayFactor = 0.35;
    constexpr double kTwoPi = 2.0 * std::numbers::pi;

    Rng rng = substream(cfg.rng_seed, "synthetic");
    const std::size_t spd = kSlotsPerDay;
    const std::size_t n_slots = cfg.n_days * spd;
    const double ring = static_cast<double>(cfg.n_edges);

    // Smooth along the ring so that neighbouring edges congest alike and the
    // dip travels upstream with a small time lag.
    const double depth_phase = kTwoPi * uniform01(rng);
    const double lag_phase = kTwoPi * uniform01(rng);
    std::vector<double> depth(cfg.n_edges);
    std::vector<double> lag(cfg.n_edges);
    for (std::size_t e = 0; e < cfg.n_edges; ++e) {
        const double x = kTwoPi * static_cast<double>(e) / ring;
        depth[e] = 1.0 + 0.08 * std::sin(x + depth_phase);
        lag[e] = 0.25 * std::sin(x + lag_phase);
    }
    std::vector<double> day_scale(cfg.n_days);
    std::vector<double> day_shift(cfg.n_days);
    for (std::size_t d = 0; d < cfg.n_days; ++d) {
        day_scale[d] = (1.0 + 0.07 * (2.0 * uniform01(rng) - 1.0)) * (d % 7 == 6 ? kQuietDayFactor : 1.0);
        day_shift[d] = 0.25 * (2.0 * uniform01(rng) - 1.0);
    }

    std::vector<double> values(cfg.n_edges * n_slots);
    for (std::size_t e = 0; e < cfg.n_edges; ++e) {
        for (std::size_t s = 0; s < n_slots; ++s) {
            const std::size_t d = s / spd;
            const double hour = 24.0 * static_cast<double>(s % spd) / static_cast<double>(spd);
            const double t = hour - lag[e] - day_shift[d];
            const double dip = bump(t, kMorningCentre, kMorningWidth) +
                               kEveningStrength * bump(t, kEveningCentre, kEveningWidth);
            double v = 1.0 - cfg.congestion_amplitude * depth[e] * day_scale[d] * dip;
            if (cfg.noise_std > 0.0) v += cfg.noise_std * standard_normal(rng);
            values[e * n_slots + s] = std::clamp(v, 0.05, 1.2);
        }
    }
    return SpeedPanel(cfg.n_edges, n_slots, spd, std::move(values),
                      std::vector<std::uint8_t>(cfg.n_edges * n_slots, 1),
                      std::vector<double>(cfg.n_edges, cfg.free_flow_kph));
}

}  // namespace fcd::data
