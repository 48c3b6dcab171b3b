#pragma once

#include <filesystem>
#include <optional>

#include "fgnn/model.hpp"
#include "fgnn/train.hpp"

namespace fgnn {

// Single-file checkpoint:
//   8 bytes   magic "FGNNCKPT"
//   8 bytes   little-endian manifest length L
//   L bytes   JSON manifest (format version, config, tensor names/shapes,
//             gate order, payload checksum)
//   payload   little-endian float64 arrays in manifest order: model
//             parameters, then Adam first and second moments if present.
struct Checkpoint {
  TrainingConfig config;
  ModelParams params;
  std::optional<AdamState> adam;
};

void save_checkpoint(const std::filesystem::path& path, const TrainingConfig& config,
                     const ModelParams& params, const AdamState* adam = nullptr);

// Throws IntegrityError naming the section (header, manifest, payload,
// checksum, tensor <name>) that failed validation.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace fgnn
