#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "rmx/models/model.hpp"

namespace rmx {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// A loaded checkpoint: the rebuilt model, its config and the seed it was
/// created with.
struct Checkpoint {
  ModelConfig config;
  std::uint64_t seed = 0;
  std::unique_ptr<MotionModel<float>> model;
};

/// Byte layout (all integers little-endian):
///   "RMXC" | u32 version | u32 n | n bytes JSON {config, seed}
///   | u32 param count | per param: u16 name length, name, u8 rank,
///     rank x u32 dims, float32 payload | u32 CRC-32 of everything before.
std::vector<std::uint8_t> serialize_checkpoint(const MotionModel<float>& model,
                                               std::uint64_t seed);
/// Throws CheckpointError on bad magic, version, checksum, truncation or
/// parameter mismatch, and ConfigError when `expected` names a different
/// architecture.
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes,
                                  std::optional<Architecture> expected = std::nullopt);

void save_checkpoint(const MotionModel<float>& model, std::uint64_t seed,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<Architecture> expected = std::nullopt);

}  // namespace rmx
