#pragma once
// Architecture blocks: M-Net chirp merging, the temporal down/up stream,
// MBConv, multi-head self-attention, MaxViT and ViT blocks, residual conv
// blocks and the 3D hourglass used as the heavyweight reference.

#include <string>
#include <vector>

#include "radarformer/layers.hpp"

namespace radar {

// Fuses the real/imag axis and the chirp axis of [B, 2, T, C, H, W] into
// C_h learned channels: [B, C_h, T, H, W].
template <typename T>
class MNet {
 public:
  MNet() = default;
  MNet(ParamStore<T>& store, const std::string& name, Index chirps, Index channels);

  Tensor<T> forward(const Tensor<T>& cube) const;
  Shape profile(const Shape& in, ProfileList& out) const;
  const Conv<T>& conv() const { return conv_; }

 private:
  Index chirps_ = 0;
  Conv<T> conv_;
};

// Pre-stride activations of every temporal downsampling stage, shallowest
// first.
template <typename T>
struct MergeState {
  std::vector<Tensor<T>> skips;
};

// log2(T) stride-2 temporal conv3d stages reducing [B, C, T, H, W] to
// [B, C, H, W].
template <typename T>
class TemporalDown {
 public:
  TemporalDown() = default;
  TemporalDown(ParamStore<T>& store, const std::string& name, Index channels, Index frames, Index kernel,
               NormKind norm, Activation act);

  std::pair<Tensor<T>, MergeState<T>> forward(const Tensor<T>& x, const Context& ctx) const;
  Shape profile(const Shape& in, ProfileList& out) const;
  std::size_t stages() const { return units_.size(); }

 private:
  Index frames_ = 0;
  std::vector<ConvUnit<T>> units_;
};

// Mirror of TemporalDown: nearest repeat x2 along T, add the matching skip,
// conv3d. The last stage emits `out_channels` logits without norm/act.
template <typename T>
class TemporalUp {
 public:
  TemporalUp() = default;
  TemporalUp(ParamStore<T>& store, const std::string& name, Index channels, Index out_channels, Index frames,
             Index kernel, NormKind norm, Activation act);

  Tensor<T> forward(const Tensor<T>& y, const MergeState<T>& state, const Context& ctx) const;
  Shape profile(const Shape& in, ProfileList& out) const;

 private:
  Index frames_ = 0;
  Index channels_ = 0;
  std::vector<ConvUnit<T>> units_;
};

// Three convolutions: 1x1 C->C (wide), kxk C->C/4 (narrow), 1x1 C/4->C
// (wide). The first convolution's output is added to the last one's.
template <typename T>
class MBConv {
 public:
  MBConv() = default;
  MBConv(ParamStore<T>& store, const std::string& name, Index channels, Index kernel, NormKind norm,
         Activation act);

  Tensor<T> forward(const Tensor<T>& x, const Context& ctx) const;
  Shape profile(const Shape& in, ProfileList& out) const;
  const ConvUnit<T>& expand() const { return wide_in_; }
  const Conv<T>& project() const { return wide_out_; }

 private:
  ConvUnit<T> wide_in_, narrow_;
  Conv<T> wide_out_;
};

// Multi-head self-attention over [Bw, N, S] tokens with S_l = S / heads.
template <typename T>
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(ParamStore<T>& store, const std::string& name, Index width, Index heads);

  Tensor<T> forward(const Tensor<T>& tokens) const;
  Shape profile(const Shape& in, ProfileList& out) const;
  const Linear<T>& qkv() const { return qkv_; }
  const Linear<T>& proj() const { return proj_; }
  Index heads() const { return heads_; }

 private:
  std::string name_;
  Index width_ = 0, heads_ = 1;
  Linear<T> qkv_, proj_;
};

// Pre-norm transformer layer: x + MSA(LN(x)), then x + MLP(LN(x)).
template <typename T>
class TransformerLayer {
 public:
  TransformerLayer() = default;
  TransformerLayer(ParamStore<T>& store, const std::string& name, Index width, Index heads, Index mlp_ratio,
                   Activation act);

  Tensor<T> forward(const Tensor<T>& tokens, const Context& ctx) const;
  Shape profile(const Shape& in, ProfileList& out) const;
  const MultiHeadAttention<T>& attention() const { return attn_; }
  const Linear<T>& mlp_out() const { return fc2_; }

 private:
  Norm<T> ln1_, ln2_;
  MultiHeadAttention<T> attn_;
  Linear<T> fc1_, fc2_;
  Activation act_ = Activation::gelu;
};

// MBConv, then window attention over P x P windows, then grid attention
// over a dilated G x G grid.
template <typename T>
class MaxViTBlock {
 public:
  struct Options {
    Index width = 32;
    Index heads = 2;
    Index mlp_ratio = 20;
    Index window = 7;
    Index grid = 7;
    Index mbconv_kernel = 3;
    NormKind norm = NormKind::batch;
    Activation act = Activation::gelu;
  };

  MaxViTBlock() = default;
  MaxViTBlock(ParamStore<T>& store, const std::string& name, const Options& opt);

  Tensor<T> forward(const Tensor<T>& x, const Context& ctx) const;
  Shape profile(const Shape& in, ProfileList& out) const;

 private:
  Options opt_;
  MBConv<T> mbconv_;
  TransformerLayer<T> window_attn_, grid_attn_;
};

// Patch embedding plus positional embedding plus a transformer encoder:
// [B, C, H, W] -> [B, E, H/p, W/p].
template <typename T>
class ViTEncoder {
 public:
  ViTEncoder() = default;
  ViTEncoder(ParamStore<T>& store, const std::string& name, Index in_channels, Index height, Index width,
             Index patch, Index embed, Index depth, Index heads, Index mlp_ratio, Activation act);

  Tensor<T> forward(const Tensor<T>& x, const Context& ctx) const;
  Shape profile(const Shape& in, ProfileList& out) const;
  const Tensor<T>& positional() const { return pos_; }

 private:
  std::string name_;
  Index in_channels_ = 0, patch_ = 1, embed_ = 0, grid_h_ = 0, grid_w_ = 0;
  Linear<T> embed_proj_;
  Tensor<T> pos_;
  std::vector<TransformerLayer<T>> layers_;
};

// Transposed-conv style upsampling of a patch map: every token is projected
// to a p x p patch of `out_channels`. [B, E, h, w] -> [B, C', h*p, w*p].
template <typename T>
class PatchUpsample {
 public:
  PatchUpsample() = default;
  PatchUpsample(ParamStore<T>& store, const std::string& name, Index embed, Index out_channels, Index patch);

  Tensor<T> forward(const Tensor<T>& map) const;
  Shape profile(const Shape& in, ProfileList& out) const;

 private:
  Index embed_ = 0, out_channels_ = 0, patch_ = 1;
  Linear<T> proj_;
};

// act(x + norm(conv(act(norm(conv(x)))))).
template <typename T>
class ResConvBlock {
 public:
  ResConvBlock() = default;
  ResConvBlock(ParamStore<T>& store, const std::string& name, Index channels, Index kernel, NormKind norm,
               Activation act);

  Tensor<T> forward(const Tensor<T>& x, const Context& ctx) const;
  Shape profile(const Shape& in, ProfileList& out) const;

 private:
  ConvUnit<T> first_, second_;
  Activation act_ = Activation::relu;
};

// 3D conv encoder/decoder over [B, Cin, T, H, W] with stride-2 levels and
// additive skips; emits `out_channels` logits at input resolution.
template <typename T>
class Hourglass3D {
 public:
  Hourglass3D() = default;
  Hourglass3D(ParamStore<T>& store, const std::string& name, Index in_channels, Index out_channels,
              const std::vector<Index>& widths, const std::vector<Index>& kernel, NormKind norm, Activation act);

  Tensor<T> forward(const Tensor<T>& x, const Context& ctx) const;
  Shape profile(const Shape& in, ProfileList& out) const;

 private:
  ConvUnit<T> stem_;
  std::vector<ConvUnit<T>> down_, refine_, up_;
  ConvUnit<T> head_;
};

// Shared helpers for the patch layout used by the ViT blocks.
template <typename T>
Tensor<T> patchify(const Tensor<T>& x, Index patch);
template <typename T>
Tensor<T> unpatchify(const Tensor<T>& tokens, Index channels, Index grid_h, Index grid_w, Index patch);

}  // namespace radar
