#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fcdcast/adam.hpp"
#include "fcdcast/sequential.hpp"

namespace fcd::nn {

enum class EntryKind : std::uint8_t { parameter = 0, buffer = 1, adam_m = 2, adam_v = 3 };

struct CheckpointEntry {
    EntryKind kind = EntryKind::parameter;
    std::string name;
    Tensor value;
};

struct AdamSnapshot {
    double eta = 0.0;
    std::uint64_t steps = 0;
};

/// Parameter checkpoint. File layout (little-endian):
///   "FCW1", u32 version, str config (JSON), u8 has_adam,
///   [f64 eta, u64 steps], u64 entry count, then per entry
///   u8 kind, str name, u32 rank, u64 extents[rank], f64 payload.
/// Strings are u32 length + bytes.
struct Checkpoint {
    std::string config_json;
    std::optional<AdamSnapshot> adam;
    std::vector<CheckpointEntry> entries;
};

Checkpoint capture(Sequential& model, std::string config_json, Adam* adam = nullptr);
/// Copies parameters, buffers and (when given) Adam moments back by name.
/// Throws StructuralError on a missing name or a shape mismatch.
void restore(const Checkpoint& ckpt, Sequential& model, Adam* adam = nullptr);

std::vector<char> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::vector<char> bytes);

/// Atomic write (temp file, then rename).
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace fcd::nn
