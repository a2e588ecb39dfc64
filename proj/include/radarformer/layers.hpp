#pragma once
// Parameterized layers: named parameter storage, convolution, linear and
// normalization layers. Each layer can describe its own cost analytically
// through profile(), which appends LayerProfile rows and returns the output
// shape for a given input shape.

#include <cstdint>
#include <string>
#include <vector>

#include "radarformer/ops.hpp"

namespace radar {

struct LayerProfile {
  std::string name;
  std::int64_t params = 0;
  std::int64_t macs = 0;
};

using ProfileList = std::vector<LayerProfile>;

// Ordered collection of trainable parameters and non-trainable buffers.
// Layers keep handles into the same storage, so loading values in place
// updates the model.
template <typename T>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor<T> tensor;
    bool trainable = true;
  };

  explicit ParamStore(std::uint64_t seed = 0) : seed_(seed) {}

  // Uniform(-bound, bound) when bound > 0, zeros otherwise.
  Tensor<T> parameter(const std::string& name, const Shape& shape, double bound);
  Tensor<T> constant(const std::string& name, const Shape& shape, double value);
  // Registers an externally owned buffer (e.g. running statistics).
  void buffer(const std::string& name, const Tensor<T>& tensor);

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Tensor<T>> trainable() const;
  const Entry* find(const std::string& name) const;
  std::int64_t trainable_count() const;
  void zero_grad();

 private:
  void add(Entry entry);

  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  std::vector<Entry> entries_;
};

enum class NormKind { none, batch, layer };

NormKind parse_norm(const std::string& text);
std::string norm_name(NormKind kind);
Activation parse_activation(const std::string& text);
std::string activation_name(Activation kind);

struct Context {
  bool training = false;
};

// 2D or 3D convolution, selected by the kernel rank.
template <typename T>
class Conv {
 public:
  Conv() = default;
  Conv(ParamStore<T>& store, const std::string& name, Index cin, Index cout, std::vector<Index> kernel,
       std::vector<Index> stride, bool bias = true);

  Tensor<T> forward(const Tensor<T>& x) const;
  Shape profile(const Shape& in, ProfileList& out) const;

  const Tensor<T>& weight() const { return weight_; }
  const Tensor<T>& bias() const { return bias_; }
  Index cin() const { return cin_; }
  Index cout() const { return cout_; }

 private:
  std::string name_;
  Index cin_ = 0, cout_ = 0;
  std::vector<Index> kernel_, stride_, padding_;
  Tensor<T> weight_, bias_;
};

// Acts on the last axis: [..., in] -> [..., out].
template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(ParamStore<T>& store, const std::string& name, Index in, Index out, bool bias = true);

  Tensor<T> forward(const Tensor<T>& x) const;
  Shape profile(const Shape& in, ProfileList& out) const;

  const Tensor<T>& weight() const { return weight_; }
  const Tensor<T>& bias() const { return bias_; }

 private:
  std::string name_;
  Index in_ = 0, out_ = 0;
  Tensor<T> weight_, bias_;
};

// Batch norm normalizes channel axis 1 over batch and space; layer norm
// normalizes `axis` (channel axis 1 for feature maps, -1 for tokens).
template <typename T>
class Norm {
 public:
  Norm() = default;
  Norm(ParamStore<T>& store, const std::string& name, NormKind kind, Index width, int axis = 1,
       double eps = 1e-5);

  Tensor<T> forward(const Tensor<T>& x, const Context& ctx) const;
  Shape profile(const Shape& in, ProfileList& out) const;
  NormKind kind() const { return kind_; }

 private:
  std::string name_;
  NormKind kind_ = NormKind::none;
  Index width_ = 0;
  int axis_ = 1;
  double eps_ = 1e-5;
  Tensor<T> gamma_, beta_;
  std::shared_ptr<BatchNormStats<T>> stats_;
};

// conv -> norm -> activation, the common building unit of stems and heads.
template <typename T>
class ConvUnit {
 public:
  ConvUnit() = default;
  ConvUnit(ParamStore<T>& store, const std::string& name, Index cin, Index cout, std::vector<Index> kernel,
           std::vector<Index> stride, NormKind norm, Activation act, bool apply_act = true);

  Tensor<T> forward(const Tensor<T>& x, const Context& ctx) const;
  Shape profile(const Shape& in, ProfileList& out) const;
  const Conv<T>& conv() const { return conv_; }

 private:
  Conv<T> conv_;
  Norm<T> norm_;
  Activation act_ = Activation::relu;
  bool apply_act_ = true;
};

}  // namespace radar
