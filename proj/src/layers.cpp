#include "radarformer/layers.hpp"

#include <cmath>

#include "radarformer/rng.hpp"

namespace radar {

NormKind parse_norm(const std::string& text) {
  if (text == "none") return NormKind::none;
  if (text == "batch") return NormKind::batch;
  if (text == "layer") return NormKind::layer;
  throw ConfigError("unknown norm kind '" + text + "' (expected none, batch or layer)");
}

std::string norm_name(NormKind kind) {
  switch (kind) {
    case NormKind::none: return "none";
    case NormKind::batch: return "batch";
    case NormKind::layer: return "layer";
  }
  return "none";
}

Activation parse_activation(const std::string& text) {
  if (text == "relu") return Activation::relu;
  if (text == "gelu") return Activation::gelu;
  if (text == "sigmoid") return Activation::sigmoid;
  throw ConfigError("unknown activation '" + text + "' (expected relu, gelu or sigmoid)");
}

std::string activation_name(Activation kind) {
  switch (kind) {
    case Activation::relu: return "relu";
    case Activation::gelu: return "gelu";
    case Activation::sigmoid: return "sigmoid";
  }
  return "relu";
}

// ---- ParamStore ------------------------------------------------------------

template <typename T>
void ParamStore<T>::add(Entry entry) {
  if (find(entry.name)) throw ConfigError("duplicate parameter name '" + entry.name + "'");
  entries_.push_back(std::move(entry));
}

template <typename T>
Tensor<T> ParamStore<T>::parameter(const std::string& name, const Shape& shape, double bound) {
  const std::uint64_t seed = mix_seed(seed_, counter_++);
  Tensor<T> t = bound > 0.0 ? create<T>(shape, init::SeededUniform{seed, -bound, bound}) : Tensor<T>::zeros(shape);
  t.set_requires_grad(true);
  add({name, t, true});
  return t;
}

template <typename T>
Tensor<T> ParamStore<T>::constant(const std::string& name, const Shape& shape, double value) {
  ++counter_;
  auto t = Tensor<T>::constant(shape, static_cast<T>(value));
  t.set_requires_grad(true);
  add({name, t, true});
  return t;
}

template <typename T>
void ParamStore<T>::buffer(const std::string& name, const Tensor<T>& tensor) {
  add({name, tensor, false});
}

template <typename T>
std::vector<Tensor<T>> ParamStore<T>::trainable() const {
  std::vector<Tensor<T>> out;
  for (const auto& e : entries_)
    if (e.trainable) out.push_back(e.tensor);
  return out;
}

template <typename T>
const typename ParamStore<T>::Entry* ParamStore<T>::find(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return &e;
  return nullptr;
}

template <typename T>
std::int64_t ParamStore<T>::trainable_count() const {
  std::int64_t n = 0;
  for (const auto& e : entries_)
    if (e.trainable) n += e.tensor.numel();
  return n;
}

template <typename T>
void ParamStore<T>::zero_grad() {
  for (auto& e : entries_)
    if (e.trainable) e.tensor.zero_grad();
}

// ---- Conv ------------------------------------------------------------------

template <typename T>
Conv<T>::Conv(ParamStore<T>& store, const std::string& name, Index cin, Index cout, std::vector<Index> kernel,
              std::vector<Index> stride, bool bias)
    : name_(name), cin_(cin), cout_(cout), kernel_(std::move(kernel)), stride_(std::move(stride)) {
  if (kernel_.size() != 2 && kernel_.size() != 3) throw ConfigError(name + ": kernel must have 2 or 3 extents");
  if (stride_.size() != kernel_.size()) throw ConfigError(name + ": stride rank differs from kernel rank");
  Index fan_in = cin;
  for (Index k : kernel_) {
    if (k < 1 || k % 2 == 0) throw ConfigError(name + ": kernel extents must be odd, got " + std::to_string(k));
    fan_in *= k;
    padding_.push_back(k / 2);
  }
  Shape wshape{cout, cin};
  wshape.insert(wshape.end(), kernel_.begin(), kernel_.end());
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  weight_ = store.parameter(name + ".weight", wshape, bound);
  if (bias) bias_ = store.parameter(name + ".bias", {cout}, bound);
}

template <typename T>
Tensor<T> Conv<T>::forward(const Tensor<T>& x) const {
  if (kernel_.size() == 2) {
    return conv2d(x, weight_, bias_, {stride_[0], stride_[1]}, {padding_[0], padding_[1]});
  }
  return conv3d(x, weight_, bias_, {stride_[0], stride_[1], stride_[2]}, {padding_[0], padding_[1], padding_[2]});
}

template <typename T>
Shape Conv<T>::profile(const Shape& in, ProfileList& out) const {
  const std::size_t spatial = kernel_.size();
  if (in.size() != spatial + 2 || in[1] != cin_) {
    throw ShapeError(name_ + ": input " + to_string(in) + " does not fit conv with " + std::to_string(cin_) +
                     " input channels");
  }
  Shape result{in[0], cout_};
  std::int64_t taps = 1;
  for (std::size_t a = 0; a < spatial; ++a) {
    result.push_back(conv_output_extent(in[a + 2], kernel_[a], stride_[a], padding_[a]));
    taps *= kernel_[a];
  }
  LayerProfile p{name_, weight_.numel() + (bias_.defined() ? bias_.numel() : 0), 0};
  p.macs = numel(result) * cin_ * taps;
  out.push_back(p);
  return result;
}

// ---- Linear ----------------------------------------------------------------

template <typename T>
Linear<T>::Linear(ParamStore<T>& store, const std::string& name, Index in, Index out, bool bias)
    : name_(name), in_(in), out_(out) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  weight_ = store.parameter(name + ".weight", {in, out}, bound);
  if (bias) bias_ = store.parameter(name + ".bias", {out}, bound);
}

template <typename T>
Tensor<T> Linear<T>::forward(const Tensor<T>& x) const {
  return linear(x, weight_, bias_);
}

template <typename T>
Shape Linear<T>::profile(const Shape& in, ProfileList& out) const {
  if (in.empty() || in.back() != in_) throw ShapeError(name_ + ": input " + to_string(in) + " has wrong width");
  Shape result = in;
  result.back() = out_;
  const std::int64_t rows = numel(in) / in_;
  out.push_back({name_, weight_.numel() + (bias_.defined() ? bias_.numel() : 0), rows * in_ * out_});
  return result;
}

// ---- Norm ------------------------------------------------------------------

template <typename T>
Norm<T>::Norm(ParamStore<T>& store, const std::string& name, NormKind kind, Index width, int axis, double eps)
    : name_(name), kind_(kind), width_(width), axis_(axis), eps_(eps) {
  if (kind_ == NormKind::none) return;
  if (!(eps > 0.0)) throw ConfigError(name + ": eps must be positive");
  gamma_ = store.constant(name + ".gamma", {width}, 1.0);
  beta_ = store.constant(name + ".beta", {width}, 0.0);
  if (kind_ == NormKind::batch) {
    stats_ = std::make_shared<BatchNormStats<T>>();
    stats_->running_mean = Tensor<T>::zeros({width});
    stats_->running_var = Tensor<T>::constant({width}, T(1));
    store.buffer(name + ".running_mean", stats_->running_mean);
    store.buffer(name + ".running_var", stats_->running_var);
  }
}

template <typename T>
Tensor<T> Norm<T>::forward(const Tensor<T>& x, const Context& ctx) const {
  switch (kind_) {
    case NormKind::none: return x;
    case NormKind::layer: return layer_norm(x, gamma_, beta_, axis_, eps_);
    case NormKind::batch: return batch_norm(x, gamma_, beta_, *stats_, ctx.training, eps_);
  }
  return x;
}

template <typename T>
Shape Norm<T>::profile(const Shape& in, ProfileList& out) const {
  if (kind_ != NormKind::none) out.push_back({name_, 2 * width_, 0});
  return in;
}

// ---- ConvUnit --------------------------------------------------------------

template <typename T>
ConvUnit<T>::ConvUnit(ParamStore<T>& store, const std::string& name, Index cin, Index cout,
                      std::vector<Index> kernel, std::vector<Index> stride, NormKind norm, Activation act,
                      bool apply_act)
    : conv_(store, name + ".conv", cin, cout, std::move(kernel), std::move(stride)),
      norm_(store, name + ".norm", norm, cout),
      act_(act),
      apply_act_(apply_act) {}

template <typename T>
Tensor<T> ConvUnit<T>::forward(const Tensor<T>& x, const Context& ctx) const {
  auto y = norm_.forward(conv_.forward(x), ctx);
  return apply_act_ ? activation(y, act_) : y;
}

template <typename T>
Shape ConvUnit<T>::profile(const Shape& in, ProfileList& out) const {
  return norm_.profile(conv_.profile(in, out), out);
}

template class ParamStore<float>;
template class ParamStore<double>;
template class Conv<float>;
template class Conv<double>;
template class Linear<float>;
template class Linear<double>;
template class Norm<float>;
template class Norm<double>;
template class ConvUnit<float>;
template class ConvUnit<double>;

}  // namespace radar
