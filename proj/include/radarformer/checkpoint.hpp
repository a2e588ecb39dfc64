#pragma once
// Model checkpoints. Layout (little-endian):
//   "RFCK" | version u16 | config length u32 | config text (key = value)
//   | blob count u32 | blobs
// Each blob: name length u16 | name | rank u8 | extents u32[rank] | values.
// Values are f32 unless the config text sets checkpoint.dtype = f64.

#include <string>
#include <vector>

#include "radarformer/kv_config.hpp"
#include "radarformer/model.hpp"

namespace radar {

inline constexpr std::uint16_t kCheckpointVersion = 1;

struct CheckpointBlob {
  std::string name;
  Shape shape;
  std::vector<double> values;  // exact copies of the stored f32/f64 values
};

struct Checkpoint {
  ModelConfig model;
  KvConfig meta;  // every non "model." key of the config text
  bool f64 = false;
  std::vector<CheckpointBlob> blobs;
};

template <typename T>
Checkpoint make_checkpoint(const Model<T>& model, const KvConfig& meta = {}, bool f64 = false);

void save_checkpoint(const std::string& path, const Checkpoint& ck);
// Throws DataError naming the file and byte offset on corruption.
Checkpoint load_checkpoint(const std::string& path);

// Copies blob values into a model built from the same config. Any name,
// shape or config mismatch is a ConfigError.
template <typename T>
void apply_checkpoint(const Checkpoint& ck, Model<T>& model);

}  // namespace radar
