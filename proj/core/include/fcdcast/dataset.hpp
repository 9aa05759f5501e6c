#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fcdcast/featurize.hpp"
#include "fcdcast/models.hpp"
#include "fcdcast/sequential.hpp"

namespace fcd::training {

/// Anchors over a panel, assembled into model-ready batches on demand.
/// The panel must outlive the dataset.
class Dataset {
public:
    Dataset(const data::SpeedPanel& panel, features::FeatureSpec spec, models::Layout layout,
            std::vector<features::Anchor> anchors);

    std::size_t size() const noexcept { return anchors_.size(); }
    bool empty() const noexcept { return anchors_.empty(); }
    const std::vector<features::Anchor>& anchors() const noexcept { return anchors_; }
    const features::FeatureSpec& spec() const noexcept { return spec_; }
    models::Layout layout() const noexcept { return layout_; }
    const data::SpeedPanel& panel() const noexcept { return *panel_; }

    /// Unroll length of the sequence layout (the horizon).
    std::size_t steps() const noexcept { return spec_.horizon(); }

    /// Model inputs for the selected samples; sequences are teacher-forced.
    nn::Tensor inputs(std::span<const std::size_t> index) const;
    /// Training targets in the model's output layout: [B, edges * H] for flat
    /// and image models, [B, H, edges] for sequences.
    nn::Tensor targets(std::span<const std::size_t> index) const;
    /// Targets as [B, edges * H] (edge-major) regardless of layout.
    nn::Tensor flat_targets(std::span<const std::size_t> index) const;

    Dataset subset(std::span<const std::size_t> index) const;

private:
    const data::SpeedPanel* panel_;
    features::FeatureSpec spec_;
    models::Layout layout_;
    std::vector<features::Anchor> anchors_;
};

/// Inference-mode predictions as [B, edges * H] (edge-major). Sequence
/// models run autoregressively: each step's outputs replace the ground truth
/// in later step inputs.
nn::Tensor predict(nn::Sequential& model, const Dataset& data, std::span<const std::size_t> index);

/// Predictions for the whole dataset in chunks of `batch` samples.
nn::Tensor predict_all(nn::Sequential& model, const Dataset& data, std::size_t batch = 256);

/// [0, 1, ..., n - 1].
std::vector<std::size_t> iota_index(std::size_t n);

}  // namespace fcd::training
