#include "fcdcast/featurize.hpp"

#include "fcdcast/errors.hpp"

namespace fcd::features {

std::string to_string(InputMode mode) { return mode == InputMode::full ? "full" : "reduced"; }

InputMode parse_input_mode(const std::string& text) {
    if (text == "full") return InputMode::full;
    if (text == "reduced") return InputMode::reduced;
    throw ValidationError("unknown input mode '" + text + "' (expected full|reduced)");
}

std::size_t FeatureSpec::input_size() const noexcept {
    return mode == InputMode::full ? full.input_size() : reduced.input_size();
}
std::size_t FeatureSpec::target_edges() const noexcept { return mode == InputMode::full ? full.n0 : 1; }
std::size_t FeatureSpec::horizon() const noexcept { return mode == InputMode::full ? full.hf : reduced.hr; }
std::size_t FeatureSpec::lookback() const noexcept { return mode == InputMode::full ? full.bf : reduced.br; }

namespace {

using Slot = std::int64_t;

// Reads v at (edge + l, slot), substituting `future` for slots at or after
// the anchor when it is provided.
struct Reader {
    const data::SpeedPanel& panel;
    std::size_t edge;
    Slot anchor;
    std::span<const double> future;
    std::size_t horizon;

    double operator()(std::size_t l, Slot slot) const {
        if (!future.empty() && slot >= anchor) {
            return future[l * horizon + static_cast<std::size_t>(slot - anchor)];
        }
        return panel.value(panel.ring_edge(edge, l), static_cast<std::size_t>(slot));
    }
};

void fill_full_input(const FullInputSpec& s, Slot t, Slot day, const Reader& get, std::span<double> out) {
    const std::size_t w = s.window();
    for (std::size_t l = 0; l < s.n0; ++l) {
        for (std::size_t b = 1; b <= s.bf; ++b) out[l * s.bf + (b - 1)] = get(l, t - static_cast<Slot>(b));
    }
    const std::size_t past = s.n0 * s.bf;
    for (std::size_t delta = 1; delta <= s.df; ++delta) {
        const Slot centre = t - static_cast<Slot>(delta) * day;
        for (std::size_t l = 0; l < s.n0; ++l) {
            double* row = out.data() + past + ((delta - 1) * s.n0 + l) * w;
            for (std::size_t k = 0; k < w; ++k) {
                row[k] = get(l, centre - static_cast<Slot>(s.p1f) + static_cast<Slot>(k));
            }
        }
    }
}

void fill_reduced_input(const ReducedInputSpec& s, Slot t, Slot day, const Reader& get, std::span<double> out) {
    for (std::size_t b = 1; b <= s.br; ++b) out[b - 1] = get(0, t - static_cast<Slot>(b));
    const std::size_t w = s.window();
    const Slot m = static_cast<Slot>(s.m);
    for (std::size_t delta = 1; delta <= s.dr; ++delta) {
        const Slot centre = t - static_cast<Slot>(delta) * day;
        for (std::size_t k = 0; k < w; ++k) {
            const Slot p = static_cast<Slot>(k) - static_cast<Slot>(s.p1r);
            double sum = 0.0;
            for (Slot i = 0; i < m; ++i) sum += get(0, centre + m * p + i);
            out[s.br + (delta - 1) * w + k] = sum / static_cast<double>(s.m);
        }
    }
}

void fill_target(const data::SpeedPanel& panel, std::size_t edges, std::size_t horizon, Anchor a,
                 std::span<double> out) {
    for (std::size_t l = 0; l < edges; ++l) {
        for (std::size_t h = 0; h < horizon; ++h) out[l * horizon + h] = panel.value(panel.ring_edge(a.edge, l), a.slot + h);
    }
}

}  // namespace

bool sample_available(const data::SpeedPanel& panel, const FeatureSpec& spec, Anchor anchor, std::size_t t_steps) {
    if (panel.n_edges() == 0 || t_steps == 0 || anchor.edge >= panel.n_edges()) return false;
    const Slot t = static_cast<Slot>(anchor.slot);
    const Slot day = static_cast<Slot>(panel.slots_per_day());
    const Slot extra = static_cast<Slot>(t_steps) - 1;
    if (spec.mode == InputMode::full) {
        const auto& s = spec.full;
        for (std::size_t l = 0; l < s.n0; ++l) {
            const std::size_t e = panel.ring_edge(anchor.edge, l);
            const Slot hi = std::max(t + static_cast<Slot>(s.hf) - 1, t + extra - 1);
            if (!panel.range_valid(e, t - static_cast<Slot>(s.bf), hi)) return false;
            for (std::size_t delta = 1; delta <= s.df; ++delta) {
                const Slot centre = t - static_cast<Slot>(delta) * day;
                if (!panel.range_valid(e, centre - static_cast<Slot>(s.p1f), centre + static_cast<Slot>(s.p2f) + extra)) {
                    return false;
                }
            }
        }
        return true;
    }
    const auto& s = spec.reduced;
    const Slot hi = std::max(t + static_cast<Slot>(s.hr) - 1, t + extra - 1);
    if (!panel.range_valid(anchor.edge, t - static_cast<Slot>(s.br), hi)) return false;
    const Slot m = static_cast<Slot>(s.m);
    for (std::size_t delta = 1; delta <= s.dr; ++delta) {
        const Slot centre = t - static_cast<Slot>(delta) * day;
        const Slot lo = centre - m * static_cast<Slot>(s.p1r);
        const Slot top = centre + m * static_cast<Slot>(s.p2r) + m - 1 + extra;
        if (!panel.range_valid(anchor.edge, lo, top)) return false;
    }
    return true;
}

std::optional<Sample> build_full_sample(const data::SpeedPanel& panel, const FullInputSpec& spec, std::size_t edge,
                                        std::size_t slot) {
    FeatureSpec fs{InputMode::full, spec, {}};
    if (!sample_available(panel, fs, {edge, slot})) return std::nullopt;
    Sample s{{edge, slot}, std::vector<double>(spec.input_size()), std::vector<double>(spec.output_size()), spec.n0,
             spec.hf};
    Reader get{panel, edge, static_cast<Slot>(slot), {}, spec.hf};
    fill_full_input(spec, static_cast<Slot>(slot), static_cast<Slot>(panel.slots_per_day()), get, s.input);
    fill_target(panel, spec.n0, spec.hf, s.anchor, s.target);
    return s;
}

std::optional<Sample> build_reduced_sample(const data::SpeedPanel& panel, const ReducedInputSpec& spec,
                                           std::size_t edge, std::size_t slot) {
    FeatureSpec fs{InputMode::reduced, {}, spec};
    if (!sample_available(panel, fs, {edge, slot})) return std::nullopt;
    Sample s{{edge, slot}, std::vector<double>(spec.input_size()), std::vector<double>(spec.output_size()), 1,
             spec.hr};
    Reader get{panel, edge, static_cast<Slot>(slot), {}, spec.hr};
    fill_reduced_input(spec, static_cast<Slot>(slot), static_cast<Slot>(panel.slots_per_day()), get, s.input);
    fill_target(panel, 1, spec.hr, s.anchor, s.target);
    return s;
}

std::optional<Sample> build_sample(const data::SpeedPanel& panel, const FeatureSpec& spec, Anchor anchor) {
    return spec.mode == InputMode::full ? build_full_sample(panel, spec.full, anchor.edge, anchor.slot)
                                        : build_reduced_sample(panel, spec.reduced, anchor.edge, anchor.slot);
}

std::vector<Anchor> enumerate_samples(const data::SpeedPanel& panel, const FeatureSpec& spec, std::size_t stride,
                                      std::optional<data::SlotRange> targets, std::size_t t_steps) {
    if (stride == 0) throw ValidationError("stride must be at least 1");
    const data::SlotRange range = targets.value_or(data::SlotRange{0, panel.n_slots()});
    const std::size_t horizon = spec.horizon();
    std::vector<Anchor> out;
    for (std::size_t e = 0; e < panel.n_edges(); ++e) {
        for (std::size_t slot = 0; slot < panel.n_slots(); slot += stride) {
            if (slot < range.begin || slot + horizon > range.end) continue;
            if (sample_available(panel, spec, {e, slot}, t_steps)) out.push_back({e, slot});
        }
    }
    return out;
}

nn::Tensor to_cnn_tensor(const Sample& sample, const FullInputSpec& spec) {
    if (spec.bf != spec.window()) {
        throw StructuralError("feature-map layout needs bf == p1f + p2f + 1 (got bf=" + std::to_string(spec.bf) +
                              ", window=" + std::to_string(spec.window()) + ")");
    }
    if (sample.input.size() != spec.input_size()) throw StructuralError("sample does not match the full spec");
    const std::size_t w = spec.bf;
    nn::Tensor out({spec.df + 1, spec.n0, w});
    for (std::size_t l = 0; l < spec.n0; ++l) {
        for (std::size_t col = 0; col < w; ++col) {
            // Column col holds b = w - col so the last column is the newest slot.
            out[l * w + col] = sample.input[l * spec.bf + (w - col - 1)];
        }
    }
    const std::size_t past = spec.n0 * spec.bf;
    for (std::size_t delta = 1; delta <= spec.df; ++delta) {
        for (std::size_t l = 0; l < spec.n0; ++l) {
            for (std::size_t col = 0; col < w; ++col) {
                out[(delta * spec.n0 + l) * w + col] = sample.input[past + ((delta - 1) * spec.n0 + l) * w + col];
            }
        }
    }
    return out;
}

void sequence_step_input(const data::SpeedPanel& panel, const FeatureSpec& spec, Anchor anchor, std::size_t tau,
                         std::span<const double> future, std::span<double> out) {
    if (out.size() != spec.input_size()) throw StructuralError("sequence step buffer has the wrong size");
    if (!future.empty() && future.size() != spec.target_edges() * spec.horizon()) {
        throw StructuralError("future block must be target_edges x horizon");
    }
    const Slot t = static_cast<Slot>(anchor.slot);
    Reader get{panel, anchor.edge, t, future, spec.horizon()};
    const Slot shifted = t + static_cast<Slot>(tau);
    const Slot day = static_cast<Slot>(panel.slots_per_day());
    if (spec.mode == InputMode::full) {
        fill_full_input(spec.full, shifted, day, get, out);
    } else {
        fill_reduced_input(spec.reduced, shifted, day, get, out);
    }
}

std::vector<std::vector<double>> to_lstm_sequence(const data::SpeedPanel& panel, const FeatureSpec& spec,
                                                  Anchor anchor, std::size_t t_steps, Feed feed,
                                                  std::span<const double> future) {
    if (t_steps == 0 || t_steps > spec.horizon() + 1) throw ValidationError("t_steps must lie in [1, horizon + 1]");
    if (feed == Feed::autoregressive && future.empty()) {
        throw ValidationError("autoregressive feeding needs the predictions made so far");
    }
    if (feed == Feed::teacher_forcing) {
        future = {};
        if (!sample_available(panel, spec, anchor, t_steps)) throw ValidationError("sample unavailable at anchor");
    }
    std::vector<std::vector<double>> seq(t_steps, std::vector<double>(spec.input_size()));
    for (std::size_t tau = 0; tau < t_steps; ++tau) sequence_step_input(panel, spec, anchor, tau, future, seq[tau]);
    return seq;
}

}  // namespace fcd::features
