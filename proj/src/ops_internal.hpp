#pragma once

#include <span>
#include <string>

#include "radarformer/kernels.hpp"
#include "radarformer/tensor.hpp"

namespace radar::detail {

// View of `axis` as [outer, extent, inner].
struct AxisView {
  Index outer = 1;
  Index extent = 1;
  Index inner = 1;
};

inline AxisView axis_view(const Shape& shape, int axis) {
  const int rank = static_cast<int>(shape.size());
  const int a = axis < 0 ? axis + rank : axis;
  if (a < 0 || a >= rank) throw ShapeError("axis " + std::to_string(axis) + " out of range");
  AxisView v;
  for (int i = 0; i < a; ++i) v.outer *= shape[static_cast<std::size_t>(i)];
  v.extent = shape[static_cast<std::size_t>(a)];
  for (int i = a + 1; i < rank; ++i) v.inner *= shape[static_cast<std::size_t>(i)];
  return v;
}

template <typename T>
void accumulate_grad(const Tensor<T>& target, std::span<const T> values) {
  auto& g = target.storage()->ensure_grad();
  kernels::axpy(T(1), values.data(), g.data(), static_cast<Index>(values.size()));
}

}  // namespace radar::detail
