#pragma once
// Dense row-major tensors with tape-based reverse-mode differentiation.
//
// A Tensor is a cheap handle to shared storage. Operations record a backward
// closure on the thread's active Tape whenever one of their inputs requires a
// gradient; with no active tape nothing is recorded (inference mode).

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "radarformer/error.hpp"

namespace radar {

using Index = std::int64_t;
using Shape = std::vector<Index>;

Index numel(const Shape& shape);
std::string to_string(const Shape& shape);
// Throws ShapeError when any extent is < 1.
void check_shape(const Shape& shape);

namespace init {
struct Zeros {};
struct Constant {
  double value;
};
struct SeededUniform {
  std::uint64_t seed;
  double lo;
  double hi;
};
}  // namespace init

using Init = std::variant<init::Zeros, init::Constant, init::SeededUniform>;

template <typename T>
struct TensorStorage {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until a gradient flows in
  bool requires_grad = false;
  bool leaf = true;

  std::vector<T>& ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), T(0));
    return grad;
  }
};

template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  Tensor(Shape shape, std::vector<T> data);

  static Tensor zeros(const Shape& shape);
  static Tensor constant(const Shape& shape, T value);
  static Tensor uniform(const Shape& shape, std::uint64_t seed, T lo, T hi);

  bool defined() const { return static_cast<bool>(storage_); }
  const Shape& shape() const { return storage_->shape; }
  int rank() const { return static_cast<int>(storage_->shape.size()); }
  // Negative axes count from the back.
  Index dim(int axis) const;
  Index numel() const { return static_cast<Index>(storage_->data.size()); }

  std::span<const T> data() const { return storage_->data; }
  // Writes bypass the tape; only use on leaves or freshly created results.
  std::span<T> mutable_data() { return storage_->data; }
  T item() const;
  T at(std::initializer_list<Index> index) const;

  bool requires_grad() const { return storage_ && storage_->requires_grad; }
  Tensor& set_requires_grad(bool flag);
  bool has_grad() const { return storage_ && !storage_->grad.empty(); }
  std::span<const T> grad() const { return storage_->grad; }
  std::span<T> mutable_grad() { return storage_->ensure_grad(); }
  void zero_grad();

  // Copy with no gradient history.
  Tensor detach() const;
  bool same_storage(const Tensor& other) const { return storage_ == other.storage_; }

  const std::shared_ptr<TensorStorage<T>>& storage() const { return storage_; }
  static Tensor wrap(std::shared_ptr<TensorStorage<T>> storage);

 private:
  std::shared_ptr<TensorStorage<T>> storage_;
};

template <typename T>
Tensor<T> create(const Shape& shape, const Init& how);

template <typename T>
class Tape {
 public:
  struct Node {
    std::string op;
    std::vector<std::shared_ptr<TensorStorage<T>>> inputs;
    std::shared_ptr<TensorStorage<T>> output;
    std::function<void()> backward;
  };

  // Becomes the active tape of the calling thread until destroyed.
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active();

  // Propagates d(loss)/d(x) into every recorded tensor that requires a
  // gradient. The tape may be replayed only after reset().
  void backward(const Tensor<T>& loss);
  void reset();

  std::size_t size() const { return nodes_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  bool consumed() const { return consumed_; }

  void record(Node node);

 private:
  std::vector<Node> nodes_;
  bool consumed_ = false;
  Tape* previous_ = nullptr;
};

// Suspends recording on this thread for its lifetime.
template <typename T>
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  Tape<T>* saved_;
};

namespace detail {

// Result tensor for an op; marks it as requiring grad when any input does
// and a tape is recording.
template <typename T>
bool should_record(std::initializer_list<const Tensor<T>*> inputs);

template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> data, bool record);

template <typename T>
void record(const char* op, std::initializer_list<const Tensor<T>*> inputs,
            const Tensor<T>& output, std::function<void()> backward);

// Debug builds assert that forward results stay finite.
template <typename T>
void check_finite(const Tensor<T>& t, const char* op);

}  // namespace detail

}  // namespace radar
