#pragma once

#include <filesystem>
#include <vector>

#include "fcdcast/featurize.hpp"

namespace fcd::features {

/// On-disk sample cache, little-endian:
///
///   "FCS1" | u32 version = 1 | str mode | u64 n | u64 input_size
///   | u64 target_edges | u64 horizon
///   | n x (u64 edge | u64 slot | f64[input_size] | f64[target_edges * horizon])
///
/// where str is a u32 length followed by the bytes.
struct SampleCache {
    InputMode mode = InputMode::reduced;
    std::size_t input_size = 0;
    std::size_t target_edges = 0;
    std::size_t horizon = 0;
    std::vector<Sample> samples;
};

SampleCache build_sample_cache(const data::SpeedPanel& panel, const FeatureSpec& spec,
                               const std::vector<Anchor>& anchors);
void write_sample_cache(const SampleCache& cache, const std::filesystem::path& path);
/// Throws FormatError on a bad magic, version, truncation or trailing bytes.
SampleCache read_sample_cache(const std::filesystem::path& path);

}  // namespace fcd::features
