#pragma once
// Architecture hyperparameters and the shipped reference presets.

#include <cstdint>
#include <string>
#include <vector>

#include "radarformer/kv_config.hpp"
#include "radarformer/layers.hpp"

namespace radar {

enum class Variant { cnn2d, transformer2d, radarformer, hourglass3d };

Variant parse_variant(const std::string& text);
std::string variant_name(Variant v);

struct ModelConfig {
  std::string name = "custom";
  Variant variant = Variant::radarformer;

  // Input/output geometry: cube [B, 2, frames, chirps, height, width],
  // ConfMaps [B, classes, frames, height, width].
  Index frames = 32;
  Index chirps = 4;
  Index height = 128;
  Index width = 128;
  Index classes = 3;

  Index merge_channels = 8;  // C_h
  Index temporal_kernel = 3;

  std::vector<Index> stem_kernels{3, 5};
  std::vector<Index> stem_strides{2, 2};
  std::vector<Index> stem_channels{32, 64};
  Index head_kernel = 3;

  Index depth = 4;  // trunk blocks (MaxViT, residual conv, or ViT layers)
  Index heads = 2;
  Index head_dim = 32;  // S_l
  Index mlp_ratio = 20;
  Index window = 7;
  Index grid = 7;
  Index mbconv_kernel = 3;
  Index block_kernel = 3;  // cnn2d residual blocks
  Index patch = 4;         // transformer2d patch size on the stem output

  std::vector<Index> hourglass_widths{32, 64, 128, 256};
  std::vector<Index> hourglass_kernel{9, 5, 5};

  NormKind norm = NormKind::batch;
  Activation act = Activation::gelu;
  std::uint64_t init_seed = 0;

  Index trunk_width() const { return stem_channels.back(); }
  Index stem_stride() const;
  Shape input_shape(Index batch = 1) const { return {batch, 2, frames, chirps, height, width}; }
  Shape output_shape(Index batch = 1) const { return {batch, classes, frames, height, width}; }

  // Throws ConfigError describing the first violated invariant.
  void validate() const;

  KvConfig to_kv() const;
  // Keys absent from `kv` keep their default; unknown keys are rejected.
  static ModelConfig from_kv(const KvConfig& kv);
  // Keys this struct reads from a KvConfig.
  static const std::set<std::string>& keys();
};

bool operator==(const ModelConfig& a, const ModelConfig& b);

// radarformer-ref, cnn2d-ref, transformer2d-ref, hourglass3d-ref,
// radarformer-tiny, cnn2d-tiny.
ModelConfig preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace radar
