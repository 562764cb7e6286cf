#pragma once

#include <string>

#include "sttn/data/preprocess.hpp"
#include "sttn/model/params.hpp"
#include "sttn/train/trainer.hpp"

namespace sttn::io {

// On disk:
//   sttn-checkpoint v1
//   [config]    key = value lines
//   [stats]     mean / std of the training normalization
//   [tensors]   one "name shape offset" line per parameter, e.g. "head.w1 16x64 0"
//   blob <nbytes>
// followed by exactly nbytes of little-endian float64 in manifest order.
struct Checkpoint {
  train::TrainConfig config;
  data::ZScoreStats stats;
  model::ModelParams params;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
std::string serialize_checkpoint(const Checkpoint& checkpoint);

// Rebuilds the parameters for the stored config. Any manifest/blob
// disagreement raises CorruptCheckpointError.
Checkpoint load_checkpoint(const std::string& path);
Checkpoint parse_checkpoint(const std::string& bytes, const std::string& source);

// As above, but shapes must match `expected` instead of the stored config.
Checkpoint load_checkpoint(const std::string& path, const train::TrainConfig& expected);
Checkpoint parse_checkpoint(const std::string& bytes, const std::string& source,
                            const train::TrainConfig& expected);

}  // namespace sttn::io
