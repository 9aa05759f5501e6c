#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fcd::data {

/// 3-minute slots in a day.
inline constexpr std::size_t kSlotsPerDay = 480;

struct RawObservation {
    std::size_t edge_id = 0;
    std::size_t slot = 0;
    double speed_kph = 0.0;
};

/// Normalized speeds over (edge, slot) with a validity mask.
///
/// Values are speed / free-flow speed. Invalid entries (unobserved or
/// masked) keep whatever value they were built with and must not be read
/// by featurization; `range_valid` is the O(1) guard for that. The edge
/// axis is a ring: edge indices wrap modulo the edge count.
class SpeedPanel {
public:
    SpeedPanel() = default;
    SpeedPanel(std::size_t n_edges, std::size_t n_slots, std::size_t slots_per_day,
               std::vector<double> values, std::vector<std::uint8_t> valid,
               std::vector<double> free_flow);

    std::size_t n_edges() const noexcept { return n_edges_; }
    std::size_t n_slots() const noexcept { return n_slots_; }
    std::size_t slots_per_day() const noexcept { return slots_per_day_; }
    std::size_t n_days() const noexcept { return n_slots_ / slots_per_day_; }

    double value(std::size_t edge, std::size_t slot) const { return values_[edge * n_slots_ + slot]; }
    bool valid(std::size_t edge, std::size_t slot) const { return valid_[edge * n_slots_ + slot] != 0; }

    /// True iff every slot in [lo, hi] on `edge` exists and is valid.
    bool range_valid(std::size_t edge, std::int64_t lo, std::int64_t hi) const;

    /// Ring topology: maps edge + offset back into [0, n_edges).
    std::size_t ring_edge(std::size_t edge, std::size_t offset) const { return (edge + offset) % n_edges_; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<const std::uint8_t> mask() const noexcept { return valid_; }
    std::span<const double> free_flow() const noexcept { return free_flow_; }

    bool operator==(const SpeedPanel& other) const;

private:
    std::size_t n_edges_ = 0;
    std::size_t n_slots_ = 0;
    std::size_t slots_per_day_ = kSlotsPerDay;
    std::vector<double> values_;
    std::vector<std::uint8_t> valid_;
    std::vector<double> free_flow_;
    // invalid_prefix_[e * (S + 1) + s] = number of invalid slots on edge e before s.
    std::vector<std::uint32_t> invalid_prefix_;
};

/// Half-open slot interval [begin, end).
struct SlotRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    bool contains(std::size_t slot) const noexcept { return slot >= begin && slot < end; }
    std::size_t size() const noexcept { return end - begin; }
};

/// Non-owning view of a slot range of a panel. Samples anchored in a view
/// keep their targets inside it but may read earlier history.
struct PanelView {
    const SpeedPanel* panel = nullptr;
    SlotRange slots;
};

struct PanelSplit {
    PanelView train;
    PanelView test;
    std::size_t boundary_day = 0;
};

struct SyntheticConfig {
    std::size_t n_edges = 32;
    std::size_t n_days = 60;
    double congestion_amplitude = 0.6;
    double noise_std = 0.03;
    std::uint64_t rng_seed = 0;
    double free_flow_kph = 65.0;
};

/// Builds a panel from raw observations. The slot axis is rounded up to whole
/// days; slots without an observation are invalid.
SpeedPanel load_panel(std::span<const RawObservation> observations, std::span<const double> free_flow,
                      std::size_t slots_per_day = kSlotsPerDay);

/// Marks slots whose time of day lies in [start_hour, end_hour) as invalid,
/// wrapping midnight when start_hour > end_hour.
SpeedPanel mask_night_hours(const SpeedPanel& panel, int start_hour = 23, int end_hour = 5);

SpeedPanel mask_night_hours(SpeedPanel&& panel, int start_hour = 23, int end_hour = 5);

/// Splits on the day boundary nearest to train_fraction * n_days.
PanelSplit chronological_split(const SpeedPanel& panel, double train_fraction);

/// Seasonal synthetic traffic: two congestion dips per weekday (weaker on
/// every 7th day), spatially correlated across neighbouring edges, plus
/// white noise, clipped to [0.05, 1.2].
SpeedPanel generate_synthetic(const SyntheticConfig& cfg);

}  // namespace fcd::data
