#include "radarformer/tensor.hpp"

#include <cmath>
#include <sstream>

#include "radarformer/rng.hpp"

namespace radar {

std::string_view category_name(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::shape: return "shape";
    case ErrorCategory::config: return "config";
    case ErrorCategory::data: return "data";
    case ErrorCategory::usage: return "usage";
    case ErrorCategory::runtime: return "runtime";
  }
  return "runtime";
}

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::config: return 2;
    case ErrorCategory::data: return 3;
    default: return 4;
  }
}

Index numel(const Shape& shape) {
  Index n = 1;
  for (Index e : shape) n *= e;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

void check_shape(const Shape& shape) {
  for (Index e : shape) {
    if (e < 1) throw ShapeError("non-positive extent in shape " + to_string(shape));
  }
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) {
  check_shape(shape);
  if (radar::numel(shape) != static_cast<Index>(data.size())) {
    throw ShapeError("buffer of " + std::to_string(data.size()) + " elements does not match shape " +
                     to_string(shape));
  }
  storage_ = std::make_shared<TensorStorage<T>>();
  storage_->shape = std::move(shape);
  storage_->data = std::move(data);
}

template <typename T>
Tensor<T> Tensor<T>::zeros(const Shape& shape) {
  return create<T>(shape, init::Zeros{});
}

template <typename T>
Tensor<T> Tensor<T>::constant(const Shape& shape, T value) {
  return create<T>(shape, init::Constant{static_cast<double>(value)});
}

template <typename T>
Tensor<T> Tensor<T>::uniform(const Shape& shape, std::uint64_t seed, T lo, T hi) {
  return create<T>(shape, init::SeededUniform{seed, static_cast<double>(lo), static_cast<double>(hi)});
}

template <typename T>
Index Tensor<T>::dim(int axis) const {
  const int r = rank();
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) throw ShapeError("axis " + std::to_string(axis) + " out of range for rank " + std::to_string(r));
  return storage_->shape[static_cast<std::size_t>(a)];
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape()));
  return storage_->data[0];
}

template <typename T>
T Tensor<T>::at(std::initializer_list<Index> index) const {
  if (static_cast<int>(index.size()) != rank()) throw ShapeError("index rank mismatch");
  Index flat = 0;
  std::size_t axis = 0;
  for (Index i : index) {
    const Index extent = storage_->shape[axis++];
    if (i < 0 || i >= extent) throw ShapeError("index out of bounds");
    flat = flat * extent + i;
  }
  return storage_->data[static_cast<std::size_t>(flat)];
}

template <typename T>
Tensor<T>& Tensor<T>::set_requires_grad(bool flag) {
  storage_->requires_grad = flag;
  return *this;
}

template <typename T>
void Tensor<T>::zero_grad() {
  if (storage_ && !storage_->grad.empty()) std::fill(storage_->grad.begin(), storage_->grad.end(), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return Tensor(storage_->shape, storage_->data);
}

template <typename T>
Tensor<T> Tensor<T>::wrap(std::shared_ptr<TensorStorage<T>> storage) {
  Tensor t;
  t.storage_ = std::move(storage);
  return t;
}

template <typename T>
Tensor<T> create(const Shape& shape, const Init& how) {
  check_shape(shape);
  std::vector<T> data(static_cast<std::size_t>(numel(shape)), T(0));
  if (const auto* c = std::get_if<init::Constant>(&how)) {
    std::fill(data.begin(), data.end(), static_cast<T>(c->value));
  } else if (const auto* u = std::get_if<init::SeededUniform>(&how)) {
    Rng rng(u->seed);
    for (auto& v : data) v = static_cast<T>(rng.uniform(u->lo, u->hi));
  }
  return Tensor<T>(shape, std::move(data));
}

namespace {
template <typename T>
Tape<T>*& active_slot() {
  thread_local Tape<T>* slot = nullptr;
  return slot;
}
}  // namespace

template <typename T>
Tape<T>::Tape() : previous_(active_slot<T>()) {
  active_slot<T>() = this;
}

template <typename T>
Tape<T>::~Tape() {
  if (active_slot<T>() == this) active_slot<T>() = previous_;
}

template <typename T>
Tape<T>* Tape<T>::active() {
  return active_slot<T>();
}

template <typename T>
void Tape<T>::record(Node node) {
  nodes_.push_back(std::move(node));
}

template <typename T>
void Tape<T>::backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw UsageError("backward() needs a scalar loss");
  }
  if (consumed_) throw UsageError("backward() called twice on the same tape without reset()");
  if (nodes_.empty()) throw UsageError("backward() on an empty tape");
  consumed_ = true;
  for (auto& node : nodes_) {
    for (auto& in : node.inputs) {
      if (in->leaf && in->requires_grad) in->ensure_grad();
    }
  }
  auto& seed = loss.storage()->ensure_grad();
  seed[0] += T(1);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->output->grad.empty()) continue;
    it->backward();
  }
}

template <typename T>
void Tape<T>::reset() {
  nodes_.clear();
  consumed_ = false;
}

template <typename T>
NoGradGuard<T>::NoGradGuard() : saved_(active_slot<T>()) {
  active_slot<T>() = nullptr;
}

template <typename T>
NoGradGuard<T>::~NoGradGuard() {
  active_slot<T>() = saved_;
}

namespace detail {

template <typename T>
bool should_record(std::initializer_list<const Tensor<T>*> inputs) {
  if (Tape<T>::active() == nullptr) return false;
  for (const auto* t : inputs) {
    if (t && t->defined() && t->requires_grad()) return true;
  }
  return false;
}

template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> data, bool record) {
  Tensor<T> out(std::move(shape), std::move(data));
  out.storage()->leaf = false;
  out.storage()->requires_grad = record;
  return out;
}

template <typename T>
void record(const char* op, std::initializer_list<const Tensor<T>*> inputs,
            const Tensor<T>& output, std::function<void()> backward) {
  Tape<T>* tape = Tape<T>::active();
  typename Tape<T>::Node node;
  node.op = op;
  for (const auto* t : inputs) {
    if (t && t->defined()) node.inputs.push_back(t->storage());
  }
  node.output = output.storage();
  node.backward = std::move(backward);
  tape->record(std::move(node));
}

template <typename T>
void check_finite([[maybe_unused]] const Tensor<T>& t, [[maybe_unused]] const char* op) {
#ifndef NDEBUG
  for (T v : t.data()) {
    if (!std::isfinite(v)) throw Error(ErrorCategory::runtime, std::string("non-finite output from ") + op);
  }
#endif
}

}  // namespace detail

#define RADAR_INSTANTIATE(T)                                                                   \
  template class Tensor<T>;                                                                    \
  template class Tape<T>;                                                                      \
  template class NoGradGuard<T>;                                                               \
  template Tensor<T> create<T>(const Shape&, const Init&);                                     \
  template bool detail::should_record<T>(std::initializer_list<const Tensor<T>*>);             \
  template Tensor<T> detail::make_result<T>(Shape, std::vector<T>, bool);                      \
  template void detail::record<T>(const char*, std::initializer_list<const Tensor<T>*>,        \
                                  const Tensor<T>&, std::function<void()>);                    \
  template void detail::check_finite<T>(const Tensor<T>&, const char*);

RADAR_INSTANTIATE(float)
RADAR_INSTANTIATE(double)
#undef RADAR_INSTANTIATE

}  // namespace radar
