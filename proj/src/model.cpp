#include "radarformer/model.hpp"

namespace radar {

template <typename T>
Model<T>::Model(const ModelConfig& cfg) : cfg_(cfg), store_(cfg.init_seed) {
  cfg_.validate();
  const auto& c = cfg_;
  if (c.variant == Variant::hourglass3d) {
    hourglass_ = std::make_unique<Hourglass3D<T>>(store_, "hourglass", 2 * c.chirps, c.classes, c.hourglass_widths,
                                                  c.hourglass_kernel, c.norm, c.act);
    return;
  }
  mnet_ = MNet<T>(store_, "mnet", c.chirps, c.merge_channels);
  down_ = TemporalDown<T>(store_, "temporal", c.merge_channels, c.frames, c.temporal_kernel, c.norm, c.act);
  Index cin = c.merge_channels;
  for (std::size_t i = 0; i < 2; ++i) {
    stem_.emplace_back(store_, "stem" + std::to_string(i), cin, c.stem_channels[i],
                       std::vector<Index>{c.stem_kernels[i], c.stem_kernels[i]},
                       std::vector<Index>{c.stem_strides[i], c.stem_strides[i]}, c.norm, c.act);
    cin = c.stem_channels[i];
  }
  const Index width = c.trunk_width();
  switch (c.variant) {
    case Variant::radarformer: {
      typename MaxViTBlock<T>::Options opt;
      opt.width = width;
      opt.heads = c.heads;
      opt.mlp_ratio = c.mlp_ratio;
      opt.window = c.window;
      opt.grid = c.grid;
      opt.mbconv_kernel = c.mbconv_kernel;
      opt.norm = c.norm;
      opt.act = c.act;
      for (Index i = 0; i < c.depth; ++i) maxvit_.emplace_back(store_, "trunk.block" + std::to_string(i), opt);
      break;
    }
    case Variant::cnn2d:
      for (Index i = 0; i < c.depth; ++i) {
        res_.emplace_back(store_, "trunk.block" + std::to_string(i), width, c.block_kernel, c.norm, c.act);
      }
      break;
    case Variant::transformer2d: {
      const Index embed = c.heads * c.head_dim;
      vit_ = std::make_unique<ViTEncoder<T>>(store_, "trunk.vit", width, c.height / c.stem_stride(),
                                             c.width / c.stem_stride(), c.patch, embed, c.depth, c.heads,
                                             c.mlp_ratio, c.act);
      vit_up_ = std::make_unique<PatchUpsample<T>>(store_, "trunk.upsample", embed, width, c.patch);
      break;
    }
    case Variant::hourglass3d: break;
  }
  head_ = ConvUnit<T>(store_, "head", width, c.merge_channels, {c.head_kernel, c.head_kernel}, {1, 1}, c.norm, c.act);
  up_ = TemporalUp<T>(store_, "temporal", c.merge_channels, c.classes, c.frames, c.temporal_kernel, c.norm, c.act);
}

template <typename T>
Tensor<T> Model<T>::forward_2d(const Tensor<T>& x, const Context& ctx) const {
  Tensor<T> s = x;
  for (const auto& unit : stem_) s = unit.forward(s, ctx);
  Tensor<T> t = s;
  for (const auto& block : maxvit_) t = block.forward(t, ctx);
  for (const auto& block : res_) t = block.forward(t, ctx);
  if (vit_) t = vit_up_->forward(vit_->forward(t, ctx));
  Tensor<T> y = add(s, t);
  const Index f = cfg_.stem_stride();
  if (f > 1) y = repeat_interleave(repeat_interleave(y, 2, f), 3, f);
  return head_.forward(y, ctx);
}

template <typename T>
Tensor<T> Model<T>::forward_logits(const Tensor<T>& cube, const Context& ctx) const {
  const Shape expected = cfg_.input_shape(cube.rank() == 6 ? cube.dim(0) : 1);
  if (cube.shape() != expected) {
    throw ShapeError("model '" + cfg_.name + "' expects input " + to_string(expected) + ", got " +
                     to_string(cube.shape()));
  }
  if (hourglass_) {
    const auto& s = cube.shape();
    auto x = reshape(permute(cube, {0, 1, 3, 2, 4, 5}), {s[0], 2 * s[3], s[2], s[4], s[5]});
    return hourglass_->forward(x, ctx);
  }
  auto merged = mnet_.forward(cube);
  auto [flat, state] = down_.forward(merged, ctx);
  return up_.forward(forward_2d(flat, ctx), state, ctx);
}

template <typename T>
ProfileList Model<T>::profile(const Shape& input) const {
  if (input.size() != 6 || input != cfg_.input_shape(input[0])) {
    throw ShapeError("model '" + cfg_.name + "' cannot profile input " + to_string(input));
  }
  ProfileList out;
  if (hourglass_) {
    hourglass_->profile({input[0], 2 * input[3], input[2], input[4], input[5]}, out);
    return out;
  }
  Shape s = down_.profile(mnet_.profile(input, out), out);
  for (const auto& unit : stem_) s = unit.profile(s, out);
  for (const auto& block : maxvit_) block.profile(s, out);
  for (const auto& block : res_) block.profile(s, out);
  if (vit_) vit_up_->profile(vit_->profile(s, out), out);
  s[2] *= cfg_.stem_stride();
  s[3] *= cfg_.stem_stride();
  up_.profile(head_.profile(s, out), out);
  return out;
}

template class Model<float>;
template class Model<double>;

}  // namespace radar
