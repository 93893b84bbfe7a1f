#pragma once

#include <filesystem>
#include <string>

#include "csisense/evaluate.hpp"
#include "csisense/fusion.hpp"

namespace csisense {

// Binary model archive: magic, format version, payload length, FNV-1a 64
// checksum, then the config snapshot and the full fusion model (banks with
// fitted biases, head weights, normalization statistics, label maps). All
// multi-byte values little-endian; doubles bit-exact.
inline constexpr std::uint32_t kArchiveMajor = 1;
inline constexpr std::uint32_t kArchiveMinor = 0;

struct LoadedModel {
  FusionModel model;
  RunConfig config;
  std::string config_json;
};

void save_model(const std::filesystem::path& path, const FusionModel& model,
                const RunConfig& config);

// Throws ArchiveError on bad magic, newer major version, truncation, or
// checksum mismatch.
LoadedModel load_model(const std::filesystem::path& path);

std::uint64_t fnv1a64(const void* data, std::size_t size);

}  // namespace csisense
