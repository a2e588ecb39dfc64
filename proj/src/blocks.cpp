#include "radarformer/blocks.hpp"

#include <cmath>

namespace radar {

namespace {

Index round_up(Index v, Index block) { return (v + block - 1) / block * block; }

}  // namespace

template <typename T>
Tensor<T> patchify(const Tensor<T>& x, Index patch) {
  const Index b = x.dim(0), c = x.dim(1), h = x.dim(2) / patch, w = x.dim(3) / patch;
  if (h * patch != x.dim(2) || w * patch != x.dim(3)) {
    throw ShapeError("patch size " + std::to_string(patch) + " does not divide " + to_string(x.shape()));
  }
  auto y = permute(reshape(x, {b, c, h, patch, w, patch}), {0, 2, 4, 1, 3, 5});
  return reshape(y, {b, h * w, c * patch * patch});
}

template <typename T>
Tensor<T> unpatchify(const Tensor<T>& tokens, Index channels, Index grid_h, Index grid_w, Index patch) {
  const Index b = tokens.dim(0);
  auto y = permute(reshape(tokens, {b, grid_h, grid_w, channels, patch, patch}), {0, 3, 1, 4, 2, 5});
  return reshape(y, {b, channels, grid_h * patch, grid_w * patch});
}

// ---- MNet ------------------------------------------------------------------

template <typename T>
MNet<T>::MNet(ParamStore<T>& store, const std::string& name, Index chirps, Index channels)
    : chirps_(chirps), conv_(store, name + ".conv", 2 * chirps, channels, {1, 3, 3}, {1, 1, 1}) {}

template <typename T>
Tensor<T> MNet<T>::forward(const Tensor<T>& cube) const {
  if (cube.rank() != 6 || cube.dim(1) != 2 || cube.dim(3) != chirps_) {
    throw ShapeError("M-Net expects [B, 2, T, " + std::to_string(chirps_) + ", H, W], got " + to_string(cube.shape()));
  }
  const auto& s = cube.shape();
  auto merged = reshape(permute(cube, {0, 1, 3, 2, 4, 5}), {s[0], 2 * chirps_, s[2], s[4], s[5]});
  return conv_.forward(merged);
}

template <typename T>
Shape MNet<T>::profile(const Shape& in, ProfileList& out) const {
  if (in.size() != 6 || in[1] != 2 || in[3] != chirps_) {
    throw ShapeError("M-Net expects [B, 2, T, " + std::to_string(chirps_) + ", H, W], got " + to_string(in));
  }
  return conv_.profile({in[0], 2 * chirps_, in[2], in[4], in[5]}, out);
}

// ---- temporal stream -------------------------------------------------------

namespace {

Index temporal_stages(Index frames) {
  if (frames < 2 || (frames & (frames - 1)) != 0) {
    throw ConfigError("window of " + std::to_string(frames) + " frames is not reducible to 1 by stride-2 stages");
  }
  Index n = 0;
  while ((Index{1} << n) < frames) ++n;
  return n;
}

}  // namespace

template <typename T>
TemporalDown<T>::TemporalDown(ParamStore<T>& store, const std::string& name, Index channels, Index frames,
                              Index kernel, NormKind norm, Activation act)
    : frames_(frames) {
  const Index n = temporal_stages(frames);
  for (Index i = 0; i < n; ++i) {
    units_.emplace_back(store, name + ".down" + std::to_string(i), channels, channels,
                        std::vector<Index>{kernel, 3, 3}, std::vector<Index>{2, 1, 1}, norm, act);
  }
}

template <typename T>
std::pair<Tensor<T>, MergeState<T>> TemporalDown<T>::forward(const Tensor<T>& x, const Context& ctx) const {
  if (x.rank() != 5 || x.dim(2) != frames_) {
    throw ShapeError("temporal stream expects " + std::to_string(frames_) + " frames, got " + to_string(x.shape()));
  }
  MergeState<T> state;
  Tensor<T> y = x;
  for (const auto& unit : units_) {
    state.skips.push_back(y);
    y = unit.forward(y, ctx);
  }
  const auto& s = y.shape();
  return {reshape(y, {s[0], s[1], s[3], s[4]}), std::move(state)};
}

template <typename T>
Shape TemporalDown<T>::profile(const Shape& in, ProfileList& out) const {
  Shape s = in;
  for (const auto& unit : units_) s = unit.profile(s, out);
  return {s[0], s[1], s[3], s[4]};
}

template <typename T>
TemporalUp<T>::TemporalUp(ParamStore<T>& store, const std::string& name, Index channels, Index out_channels,
                          Index frames, Index kernel, NormKind norm, Activation act)
    : frames_(frames), channels_(channels) {
  const Index n = temporal_stages(frames);
  for (Index i = 0; i < n; ++i) {
    const bool last = i + 1 == n;
    units_.emplace_back(store, name + ".up" + std::to_string(i), channels, last ? out_channels : channels,
                        std::vector<Index>{kernel, 3, 3}, std::vector<Index>{1, 1, 1}, last ? NormKind::none : norm,
                        act, !last);
  }
}

template <typename T>
Tensor<T> TemporalUp<T>::forward(const Tensor<T>& y, const MergeState<T>& state, const Context& ctx) const {
  if (state.skips.size() != units_.size()) {
    throw ShapeError("merge state holds " + std::to_string(state.skips.size()) + " skips, expected " +
                     std::to_string(units_.size()));
  }
  if (y.rank() != 4 || y.dim(1) != channels_) throw ShapeError("temporal upsampling input " + to_string(y.shape()));
  const auto& s = y.shape();
  Tensor<T> z = reshape(y, {s[0], s[1], 1, s[2], s[3]});
  for (std::size_t i = 0; i < units_.size(); ++i) {
    z = repeat_interleave(z, 2, 2);
    const auto& skip = state.skips[units_.size() - 1 - i];
    if (skip.shape() != z.shape()) {
      throw ShapeError("skip " + to_string(skip.shape()) + " does not match upsampled " + to_string(z.shape()));
    }
    z = units_[i].forward(add(z, skip), ctx);
  }
  return z;
}

template <typename T>
Shape TemporalUp<T>::profile(const Shape& in, ProfileList& out) const {
  Shape s{in[0], in[1], 1, in[2], in[3]};
  for (const auto& unit : units_) {
    s[2] *= 2;
    s = unit.profile(s, out);
  }
  return s;
}

// ---- MBConv ----------------------------------------------------------------

namespace {

Index narrow_width(Index channels) {
  if (channels < 4 || channels % 4 != 0) {
    throw ConfigError("MBConv width " + std::to_string(channels) + " must be a positive multiple of 4");
  }
  return channels / 4;
}

}  // namespace

template <typename T>
MBConv<T>::MBConv(ParamStore<T>& store, const std::string& name, Index channels, Index kernel, NormKind norm,
                  Activation act)
    : wide_in_(store, name + ".wide_in", channels, channels, {1, 1}, {1, 1}, norm, act),
      narrow_(store, name + ".narrow", channels, narrow_width(channels), {kernel, kernel}, {1, 1}, norm, act),
      wide_out_(store, name + ".wide_out.conv", channels / 4, channels, {1, 1}, {1, 1}) {}

template <typename T>
Tensor<T> MBConv<T>::forward(const Tensor<T>& x, const Context& ctx) const {
  auto first = wide_in_.forward(x, ctx);
  return add(first, wide_out_.forward(narrow_.forward(first, ctx)));
}

template <typename T>
Shape MBConv<T>::profile(const Shape& in, ProfileList& out) const {
  return wide_out_.profile(narrow_.profile(wide_in_.profile(in, out), out), out);
}

// ---- attention -------------------------------------------------------------

template <typename T>
MultiHeadAttention<T>::MultiHeadAttention(ParamStore<T>& store, const std::string& name, Index width, Index heads)
    : name_(name), width_(width), heads_(heads) {
  if (heads < 1 || width % heads != 0) {
    throw ConfigError(name + ": width " + std::to_string(width) + " is not divisible by " + std::to_string(heads) +
                      " heads");
  }
  qkv_ = Linear<T>(store, name + ".qkv", width, 3 * width);
  proj_ = Linear<T>(store, name + ".proj", width, width);
}

template <typename T>
Tensor<T> MultiHeadAttention<T>::forward(const Tensor<T>& tokens) const {
  if (tokens.rank() != 3 || tokens.dim(2) != width_) {
    throw ShapeError(name_ + ": expected [Bw, N, " + std::to_string(width_) + "], got " + to_string(tokens.shape()));
  }
  const Index bw = tokens.dim(0), n = tokens.dim(1), sl = width_ / heads_;
  auto qkv = permute(reshape(qkv_.forward(tokens), {bw, n, 3, heads_, sl}), {2, 0, 3, 1, 4});
  auto part = [&](Index i) { return reshape(crop(qkv, {i, 0, 0, 0, 0}, {1, bw, heads_, n, sl}), {bw, heads_, n, sl}); };
  const auto q = part(0), k = part(1), v = part(2);
  auto scores = scale(matmul(q, permute(k, {0, 1, 3, 2})), static_cast<T>(1.0 / std::sqrt(double(sl))));
  auto mixed = matmul(softmax(scores, 3), v);
  return proj_.forward(reshape(permute(mixed, {0, 2, 1, 3}), {bw, n, width_}));
}

template <typename T>
Shape MultiHeadAttention<T>::profile(const Shape& in, ProfileList& out) const {
  if (in.size() != 3 || in[2] != width_) throw ShapeError(name_ + ": bad token shape " + to_string(in));
  qkv_.profile(in, out);
  const std::int64_t products = in[0] * in[1] * in[1] * width_;
  out.push_back({name_ + ".scores", 0, products});
  out.push_back({name_ + ".weighted_sum", 0, products});
  return proj_.profile(in, out);
}

template <typename T>
TransformerLayer<T>::TransformerLayer(ParamStore<T>& store, const std::string& name, Index width, Index heads,
                                      Index mlp_ratio, Activation act)
    : ln1_(store, name + ".ln1", NormKind::layer, width, -1),
      ln2_(store, name + ".ln2", NormKind::layer, width, -1),
      attn_(store, name + ".attn", width, heads),
      fc1_(store, name + ".mlp.fc1", width, width * mlp_ratio),
      fc2_(store, name + ".mlp.fc2", width * mlp_ratio, width),
      act_(act) {}

template <typename T>
Tensor<T> TransformerLayer<T>::forward(const Tensor<T>& tokens, const Context& ctx) const {
  auto x = add(tokens, attn_.forward(ln1_.forward(tokens, ctx)));
  return add(x, fc2_.forward(activation(fc1_.forward(ln2_.forward(x, ctx)), act_)));
}

template <typename T>
Shape TransformerLayer<T>::profile(const Shape& in, ProfileList& out) const {
  ln1_.profile(in, out);
  attn_.profile(in, out);
  ln2_.profile(in, out);
  return fc2_.profile(fc1_.profile(in, out), out);
}

template <typename T>
MaxViTBlock<T>::MaxViTBlock(ParamStore<T>& store, const std::string& name, const Options& opt)
    : opt_(opt),
      mbconv_(store, name + ".mbconv", opt.width, opt.mbconv_kernel, opt.norm, opt.act),
      window_attn_(store, name + ".window", opt.width, opt.heads, opt.mlp_ratio, opt.act),
      grid_attn_(store, name + ".grid", opt.width, opt.heads, opt.mlp_ratio, opt.act) {
  if (opt.window < 1 || opt.grid < 1) throw ConfigError(name + ": window and grid sizes must be positive");
}

template <typename T>
Tensor<T> MaxViTBlock<T>::forward(const Tensor<T>& x, const Context& ctx) const {
  auto y = mbconv_.forward(x, ctx);
  const Shape shape = y.shape();
  y = window_reverse(window_attn_.forward(window_partition(y, opt_.window), ctx), opt_.window, shape);
  return grid_reverse(grid_attn_.forward(grid_partition(y, opt_.grid), ctx), opt_.grid, shape);
}

template <typename T>
Shape MaxViTBlock<T>::profile(const Shape& in, ProfileList& out) const {
  const Shape s = mbconv_.profile(in, out);
  const Index p = opt_.window, g = opt_.grid;
  const Index windows = s[0] * (round_up(s[2], p) / p) * (round_up(s[3], p) / p);
  window_attn_.profile({windows, p * p, s[1]}, out);
  const Index groups = s[0] * (round_up(s[2], g) / g) * (round_up(s[3], g) / g);
  grid_attn_.profile({groups, g * g, s[1]}, out);
  return s;
}

// ---- ViT -------------------------------------------------------------------

template <typename T>
ViTEncoder<T>::ViTEncoder(ParamStore<T>& store, const std::string& name, Index in_channels, Index height,
                          Index width, Index patch, Index embed, Index depth, Index heads, Index mlp_ratio,
                          Activation act)
    : name_(name), in_channels_(in_channels), patch_(patch), embed_(embed) {
  if (patch < 1 || height % patch != 0 || width % patch != 0) {
    throw ConfigError(name + ": patch size " + std::to_string(patch) + " does not divide " + std::to_string(height) +
                      "x" + std::to_string(width));
  }
  grid_h_ = height / patch;
  grid_w_ = width / patch;
  embed_proj_ = Linear<T>(store, name + ".patch_embed", in_channels * patch * patch, embed);
  pos_ = store.parameter(name + ".pos_embed", {grid_h_ * grid_w_, embed}, 0.0);
  for (Index i = 0; i < depth; ++i) {
    layers_.emplace_back(store, name + ".layer" + std::to_string(i), embed, heads, mlp_ratio, act);
  }
}

template <typename T>
Tensor<T> ViTEncoder<T>::forward(const Tensor<T>& x, const Context& ctx) const {
  if (x.rank() != 4 || x.dim(1) != in_channels_ || x.dim(2) != grid_h_ * patch_ || x.dim(3) != grid_w_ * patch_) {
    throw ShapeError(name_ + ": unexpected input " + to_string(x.shape()));
  }
  auto tokens = add_trailing(embed_proj_.forward(patchify(x, patch_)), pos_);
  for (const auto& layer : layers_) tokens = layer.forward(tokens, ctx);
  return permute(reshape(tokens, {x.dim(0), grid_h_, grid_w_, embed_}), {0, 3, 1, 2});
}

template <typename T>
Shape ViTEncoder<T>::profile(const Shape& in, ProfileList& out) const {
  if (in.size() != 4 || in[1] != in_channels_ || in[2] != grid_h_ * patch_ || in[3] != grid_w_ * patch_) {
    throw ShapeError(name_ + ": unexpected input " + to_string(in));
  }
  Shape tokens{in[0], grid_h_ * grid_w_, in_channels_ * patch_ * patch_};
  tokens = embed_proj_.profile(tokens, out);
  out.push_back({name_ + ".pos_embed", pos_.numel(), 0});
  for (const auto& layer : layers_) tokens = layer.profile(tokens, out);
  return {in[0], embed_, grid_h_, grid_w_};
}

template <typename T>
PatchUpsample<T>::PatchUpsample(ParamStore<T>& store, const std::string& name, Index embed, Index out_channels,
                                Index patch)
    : embed_(embed), out_channels_(out_channels), patch_(patch),
      proj_(store, name + ".proj", embed, out_channels * patch * patch) {}

template <typename T>
Tensor<T> PatchUpsample<T>::forward(const Tensor<T>& map) const {
  const Index b = map.dim(0), h = map.dim(2), w = map.dim(3);
  auto tokens = reshape(permute(map, {0, 2, 3, 1}), {b, h * w, embed_});
  return unpatchify(proj_.forward(tokens), out_channels_, h, w, patch_);
}

template <typename T>
Shape PatchUpsample<T>::profile(const Shape& in, ProfileList& out) const {
  proj_.profile({in[0], in[2] * in[3], embed_}, out);
  return {in[0], out_channels_, in[2] * patch_, in[3] * patch_};
}

// ---- conv blocks -----------------------------------------------------------

template <typename T>
ResConvBlock<T>::ResConvBlock(ParamStore<T>& store, const std::string& name, Index channels, Index kernel,
                              NormKind norm, Activation act)
    : first_(store, name + ".first", channels, channels, {kernel, kernel}, {1, 1}, norm, act),
      second_(store, name + ".second", channels, channels, {kernel, kernel}, {1, 1}, norm, act, false),
      act_(act) {}

template <typename T>
Tensor<T> ResConvBlock<T>::forward(const Tensor<T>& x, const Context& ctx) const {
  return activation(add(x, second_.forward(first_.forward(x, ctx), ctx)), act_);
}

template <typename T>
Shape ResConvBlock<T>::profile(const Shape& in, ProfileList& out) const {
  return second_.profile(first_.profile(in, out), out);
}

template <typename T>
Hourglass3D<T>::Hourglass3D(ParamStore<T>& store, const std::string& name, Index in_channels, Index out_channels,
                            const std::vector<Index>& widths, const std::vector<Index>& kernel, NormKind norm,
                            Activation act) {
  if (widths.size() < 2) throw ConfigError(name + ": hourglass needs at least two widths");
  const std::vector<Index> one{1, 1, 1}, two{2, 2, 2};
  stem_ = ConvUnit<T>(store, name + ".stem", in_channels, widths[0], kernel, one, norm, act);
  for (std::size_t i = 1; i < widths.size(); ++i) {
    const std::string level = name + ".level" + std::to_string(i);
    down_.emplace_back(store, level + ".down", widths[i - 1], widths[i], kernel, two, norm, act);
    refine_.emplace_back(store, level + ".refine", widths[i], widths[i], kernel, one, norm, act);
    up_.emplace_back(store, level + ".up", widths[i], widths[i - 1], kernel, one, norm, act);
  }
  head_ = ConvUnit<T>(store, name + ".head", widths[0], out_channels, kernel, one, NormKind::none, act, false);
}

template <typename T>
Tensor<T> Hourglass3D<T>::forward(const Tensor<T>& x, const Context& ctx) const {
  std::vector<Tensor<T>> skips;
  auto y = stem_.forward(x, ctx);
  for (std::size_t i = 0; i < down_.size(); ++i) {
    skips.push_back(y);
    y = refine_[i].forward(down_[i].forward(y, ctx), ctx);
  }
  for (std::size_t i = down_.size(); i-- > 0;) {
    y = up_[i].forward(y, ctx);
    for (int axis = 2; axis < 5; ++axis) y = repeat_interleave(y, axis, 2);
    y = add(y, skips[i]);
  }
  return head_.forward(y, ctx);
}

template <typename T>
Shape Hourglass3D<T>::profile(const Shape& in, ProfileList& out) const {
  Shape s = stem_.profile(in, out);
  for (std::size_t i = 0; i < down_.size(); ++i) s = refine_[i].profile(down_[i].profile(s, out), out);
  for (std::size_t i = down_.size(); i-- > 0;) {
    s = up_[i].profile(s, out);
    for (std::size_t a = 2; a < 5; ++a) s[a] *= 2;
  }
  return head_.profile(s, out);
}

#define RADAR_INSTANTIATE(T)                                                                \
  template Tensor<T> patchify<T>(const Tensor<T>&, Index);                                  \
  template Tensor<T> unpatchify<T>(const Tensor<T>&, Index, Index, Index, Index);           \
  template class MNet<T>;                                                                   \
  template class TemporalDown<T>;                                                           \
  template class TemporalUp<T>;                                                             \
  template class MBConv<T>;                                                                 \
  template class MultiHeadAttention<T>;                                                     \
  template class TransformerLayer<T>;                                                       \
  template class MaxViTBlock<T>;                                                            \
  template class ViTEncoder<T>;                                                             \
  template class PatchUpsample<T>;                                                          \
  template class ResConvBlock<T>;                                                           \
  template class Hourglass3D<T>;

RADAR_INSTANTIATE(float)
RADAR_INSTANTIATE(double)
#undef RADAR_INSTANTIATE

}  // namespace radar
