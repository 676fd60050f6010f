#pragma once

#include <string>

#include "imcgae/model.hpp"

namespace imcgae {

/// Version tag written at the start of every checkpoint.
inline constexpr char kCheckpointTag[] = "imcgae-ckpt-v1";

/// Binary little-endian container: tag, hyperparameters, dataset dims,
/// rating levels, then every named tensor (see docs/checkpoint.md for the
/// exact byte layout).
void save_checkpoint(const std::string& path, const ModelParams& params, const HyperParams& hp);

struct Checkpoint {
  ModelParams params;
  HyperParams hp;
};

/// Throws std::runtime_error on a missing file, bad tag, truncation, or
/// non-finite values.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace imcgae
