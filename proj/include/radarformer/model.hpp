#pragma once
// Full detection models: RadarCube [B, 2, T, C, H, W] -> ConfMaps
// [B, K, T, H, W] in [0, 1].

#include <memory>

#include "radarformer/blocks.hpp"
#include "radarformer/model_config.hpp"

namespace radar {

template <typename T>
class Model {
 public:
  explicit Model(const ModelConfig& cfg);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const { return cfg_; }
  ParamStore<T>& params() { return store_; }
  const ParamStore<T>& params() const { return store_; }

  Tensor<T> forward_logits(const Tensor<T>& cube, const Context& ctx = {}) const;
  Tensor<T> forward(const Tensor<T>& cube, const Context& ctx = {}) const { return sigmoid(forward_logits(cube, ctx)); }

  // Per-layer parameter and MAC accounting for a given input shape. Layer
  // names start with their stage ("mnet.", "temporal.", "stem.", ...).
  ProfileList profile(const Shape& input) const;

 private:
  Tensor<T> forward_2d(const Tensor<T>& x, const Context& ctx) const;

  ModelConfig cfg_;
  ParamStore<T> store_;
  MNet<T> mnet_;
  TemporalDown<T> down_;
  TemporalUp<T> up_;
  std::vector<ConvUnit<T>> stem_;
  std::vector<MaxViTBlock<T>> maxvit_;
  std::vector<ResConvBlock<T>> res_;
  std::unique_ptr<ViTEncoder<T>> vit_;
  std::unique_ptr<PatchUpsample<T>> vit_up_;
  ConvUnit<T> head_;
  std::unique_ptr<Hourglass3D<T>> hourglass_;
};

}  // namespace radar
