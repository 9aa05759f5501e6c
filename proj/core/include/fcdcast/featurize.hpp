#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fcdcast/panel.hpp"
#include "fcdcast/tensor.hpp"

namespace fcd::features {

enum class InputMode { full, reduced };

std::string to_string(InputMode mode);
InputMode parse_input_mode(const std::string& text);

/// Multi-edge window: `n0` contiguous edges, `bf` current-day slots before
/// the anchor, and `p1f + p2f + 1` slots around the anchor time on each of
/// `df` previous days. Predicts `hf` slots for every edge.
struct FullInputSpec {
    std::size_t n0 = 32;
    std::size_t bf = 32;
    std::size_t df = 7;
    std::size_t p1f = 15;
    std::size_t p2f = 16;
    std::size_t hf = 20;

    std::size_t window() const noexcept { return p1f + p2f + 1; }
    std::size_t input_size() const noexcept { return n0 * (bf + window() * df); }
    std::size_t output_size() const noexcept { return n0 * hf; }
};

/// Single-edge window: `br` recent slots plus, on each of `dr` previous days,
/// `p1r + p2r + 1` averages of `m` consecutive slots.
struct ReducedInputSpec {
    std::size_t br = 4;
    std::size_t dr = 7;
    std::size_t p1r = 0;
    std::size_t p2r = 3;
    std::size_t m = 5;
    std::size_t hr = 20;

    std::size_t window() const noexcept { return p1r + p2r + 1; }
    std::size_t input_size() const noexcept { return br + window() * dr; }
    std::size_t output_size() const noexcept { return hr; }
};

/// One of the two schemes, selected by `mode`.
struct FeatureSpec {
    InputMode mode = InputMode::reduced;
    FullInputSpec full;
    ReducedInputSpec reduced;

    std::size_t input_size() const noexcept;
    std::size_t target_edges() const noexcept;
    std::size_t horizon() const noexcept;
    /// Current-day lookback in slots (bf or br).
    std::size_t lookback() const noexcept;
};

struct Anchor {
    std::size_t edge = 0;
    std::size_t slot = 0;
    bool operator==(const Anchor&) const = default;
};

struct Sample {
    Anchor anchor;
    std::vector<double> input;
    /// Row-major [target_edges x horizon].
    std::vector<double> target;
    std::size_t target_edges = 0;
    std::size_t horizon = 0;
};

/// Flat full input. Layout: the current-day block first, indexed
/// [l][b-1] for b = 1..bf (going back in time), then for each past day
/// delta = 1..df a block indexed [l][p + p1f].
/// Returns nullopt when any required slot is missing or invalid.
std::optional<Sample> build_full_sample(const data::SpeedPanel& panel, const FullInputSpec& spec, std::size_t edge,
                                        std::size_t slot);

/// Flat reduced input: br recent slots (b ascending), then for each past day
/// the window averages with p ascending.
std::optional<Sample> build_reduced_sample(const data::SpeedPanel& panel, const ReducedInputSpec& spec,
                                           std::size_t edge, std::size_t slot);

std::optional<Sample> build_sample(const data::SpeedPanel& panel, const FeatureSpec& spec, Anchor anchor);

/// O(edges x days) validity check via the panel's prefix counts. With
/// t_steps > 1 it also covers the extra slots a sequence unroll reads.
bool sample_available(const data::SpeedPanel& panel, const FeatureSpec& spec, Anchor anchor,
                      std::size_t t_steps = 1);

/// Anchors on the stride grid (slot = 0, stride, 2*stride, ...) whose sample
/// is fully valid and whose target window lies inside `targets`. Edge-major.
std::vector<Anchor> enumerate_samples(const data::SpeedPanel& panel, const FeatureSpec& spec, std::size_t stride,
                                      std::optional<data::SlotRange> targets = std::nullopt,
                                      std::size_t t_steps = 1);

/// [df + 1, n0, bf] feature maps: channel 0 is the current day ordered
/// oldest to newest along the width, channel delta holds day T - delta*D.
nn::Tensor to_cnn_tensor(const Sample& sample, const FullInputSpec& spec);

enum class Feed { teacher_forcing, autoregressive };

/// Input vector of a recurrent unroll at step tau: the static input of the
/// anchor shifted by tau slots. Slots at or after the anchor come from
/// `future` ([target_edges x horizon], e.g. earlier predictions) when it is
/// non-empty, else from the panel (teacher forcing).
void sequence_step_input(const data::SpeedPanel& panel, const FeatureSpec& spec, Anchor anchor, std::size_t tau,
                         std::span<const double> future, std::span<double> out);

/// Whole unroll; autoregressive feeding requires `future` to hold the
/// predictions made so far.
std::vector<std::vector<double>> to_lstm_sequence(const data::SpeedPanel& panel, const FeatureSpec& spec,
                                                  Anchor anchor, std::size_t t_steps, Feed feed,
                                                  std::span<const double> future = {});

}  // namespace fcd::features
