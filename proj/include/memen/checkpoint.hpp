#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "memen/model.hpp"
#include "memen/trainer.hpp"

namespace memen {

inline constexpr char kCheckpointMagic[8] = {'M', 'E', 'M', 'E', 'N', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Layout (little-endian):
//   magic[8] | u32 version | u64 metadata length | metadata JSON
//   u64 parameter count, then per parameter:
//   u32 name length | name | u8 trainable | u64 rows | u64 cols | rows*cols f64
// The metadata holds the training config and every vocabulary.
void save_checkpoint(const std::filesystem::path& path, const MemenModel& model, const TrainConfig& config);

struct LoadedCheckpoint {
  TrainConfig config;
  MemenModel model;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace memen
