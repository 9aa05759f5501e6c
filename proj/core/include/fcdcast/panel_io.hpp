#pragma once

#include <filesystem>
#include <vector>

#include "fcdcast/panel.hpp"

namespace fcd::data {

/// Reads `edge_id,slot,speed_kph` rows (header required).
std::vector<RawObservation> read_observations_csv(const std::filesystem::path& path);

/// Reads `edge_id,ffs_kph` rows; edge ids must cover 0..L-1 exactly once.
std::vector<double> read_free_flow_csv(const std::filesystem::path& path);

/// Panel cache layout (all little-endian):
///   "FCD1", u32 L, u32 S, u32 slots_per_day,
///   L*S f64 values (row-major by edge), L*S u8 mask,
///   then an optional trailer "FFS1" + L f64 free-flow speeds.
void write_panel(const SpeedPanel& panel, const std::filesystem::path& path);
SpeedPanel read_panel(const std::filesystem::path& path);

}  // namespace fcd::data
