#pragma once
// On-disk datasets: a manifest plus one cube file and one annotation file
// per sequence.
//
//   manifest.txt   key = value text (format.version, dataset.*, seq.NNN.*)
//   NN_seq.ramc    "RAMC" | version u16 | extents u32 x 5 (2, T, C, H, W)
//                  | little-endian f32 payload
//   NN_seq.ann     annotation lines (see confmap.hpp)

#include <string>
#include <vector>

#include "radarformer/confmap.hpp"
#include "radarformer/synth.hpp"

namespace radar {

inline constexpr std::uint16_t kCubeVersion = 1;
inline constexpr std::int64_t kManifestVersion = 1;

struct Sequence {
  std::string name;
  std::string scenario;  // PL, CR, CS or HW
  std::string split;     // train or val
  Tensor<float> cube;    // [2, T, C, H, W]
  std::vector<Annotation> annotations;

  Index frames() const { return cube.dim(1); }
};

struct SequenceInfo {
  std::string name, scenario, split, cube_file, annotation_file;
  Index frames = 0;
};

struct DatasetManifest {
  std::int64_t version = kManifestVersion;
  Index chirps = 0, height = 0, width = 0;
  Index total_frames = 0;
  std::vector<SequenceInfo> sequences;
};

void write_cube(const std::string& path, const Tensor<float>& cube);
// Throws DataError naming the file and byte offset.
Tensor<float> read_cube(const std::string& path);

DatasetManifest write_dataset(const std::string& dir, const std::vector<Sequence>& sequences);
DatasetManifest read_manifest(const std::string& dir);
Sequence read_sequence(const std::string& dir, const SequenceInfo& info, const DatasetManifest& manifest);
std::vector<Sequence> read_dataset(const std::string& dir);

// Seeded synthetic dataset: sequence i uses scenario PL, CR, CS, HW in turn
// and every fifth sequence (i % 5 == 4) is held out for validation.
std::vector<Sequence> synthesize_dataset(std::uint64_t seed, Index count, const SynthConfig& config);

}  // namespace radar
