#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "decsde/nmt/transformer.h"
#include "decsde/trainer/trainer.h"

namespace decsde::trainer {

// Binary layout (little endian):
//   "DSDE" u32 version(1) u32 value_bytes(4 or 8)
//   str config_text, u32 n {str key, str path}       -- referenced files
//   i64 epoch i64 step u64 seed u8 has_optimizer
//   u32 n { str name, u32 rank, i64 dims..., values [, m values, v values] }
// where str = u32 length + bytes. Float models store 32-bit values.
struct CheckpointInfo {
  uint32_t value_bytes = 4;
  std::string config_text;
  std::vector<std::pair<std::string, std::string>> files;
  int64_t epoch = 0;
  int64_t step = 0;
  uint64_t seed = 0;
  bool has_optimizer = false;
};

template <typename T>
void save_checkpoint(const std::filesystem::path& path, nmt::Transformer<T>& model, Trainer<T>* trainer,
                     const CheckpointInfo& info);

// Header only, enough to rebuild the model before load_checkpoint.
CheckpointInfo read_checkpoint_info(const std::filesystem::path& path);

// Restores parameter values (bumping their versions) and, when trainer is
// given and the file has optimizer state, Adam moments and counters.
// Names, shapes and value width must match; DataError otherwise.
template <typename T>
CheckpointInfo load_checkpoint(const std::filesystem::path& path, nmt::Transformer<T>& model, Trainer<T>* trainer);

}  // namespace decsde::trainer
