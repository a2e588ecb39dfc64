#include <algorithm>
#include <numeric>

#include "ops_internal.hpp"
#include "radarformer/ops.hpp"

namespace radar {

namespace {

std::vector<Index> strides_of(const Shape& shape) {
  std::vector<Index> s(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) s[i - 1] = s[i] * shape[i];
  return s;
}

// Calls fn(flat_out, flat_in) for every output element where the input
// offset is built from per-axis input strides (strides may be permuted).
template <typename Fn>
void for_each_strided(const Shape& out_shape, const std::vector<Index>& in_strides, Index in_base, Fn fn) {
  const std::size_t rank = out_shape.size();
  const Index total = numel(out_shape);
  if (total == 0) return;
  std::vector<Index> coord(rank, 0);
  Index in_off = in_base;
  const Index last = rank ? out_shape[rank - 1] : 1;
  const Index last_stride = rank ? in_strides[rank - 1] : 0;
  for (Index flat = 0; flat < total; flat += last) {
    for (Index j = 0; j < last; ++j) fn(flat + j, in_off + j * last_stride);
    // advance all but the innermost axis
    for (std::size_t a = rank - 1; a-- > 0;) {
      ++coord[a];
      in_off += in_strides[a];
      if (coord[a] < out_shape[a]) break;
      in_off -= in_strides[a] * out_shape[a];
      coord[a] = 0;
    }
  }
}

Index padded_extent(Index extent, Index block) { return (extent + block - 1) / block * block; }

}  // namespace

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, const Shape& shape) {
  check_shape(shape);
  if (numel(shape) != x.numel()) {
    throw ShapeError("reshape " + to_string(x.shape()) + " -> " + to_string(shape) + " changes element count");
  }
  std::vector<T> out(x.data().begin(), x.data().end());
  const bool rec = detail::should_record<T>({&x});
  auto result = detail::make_result<T>(shape, std::move(out), rec);
  if (rec) {
    detail::record<T>("reshape", {&x}, result, [x, result]() mutable {
      detail::accumulate_grad(x, result.grad());
    });
  }
  return result;
}

template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<int>& order) {
  const std::size_t rank = x.shape().size();
  if (order.size() != rank) throw ShapeError("permute order rank mismatch");
  std::vector<int> check(order);
  std::sort(check.begin(), check.end());
  for (std::size_t i = 0; i < rank; ++i) {
    if (check[i] != static_cast<int>(i)) throw ShapeError("permute order is not a permutation");
  }
  const auto in_strides = strides_of(x.shape());
  Shape out_shape(rank);
  std::vector<Index> gather(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    out_shape[i] = x.shape()[static_cast<std::size_t>(order[i])];
    gather[i] = in_strides[static_cast<std::size_t>(order[i])];
  }
  std::vector<T> out(static_cast<std::size_t>(x.numel()));
  const T* src = x.data().data();
  for_each_strided(out_shape, gather, 0, [&](Index o, Index i) { out[static_cast<std::size_t>(o)] = src[i]; });
  const bool rec = detail::should_record<T>({&x});
  auto result = detail::make_result<T>(out_shape, std::move(out), rec);
  if (rec) {
    detail::record<T>("permute", {&x}, result, [x, result, out_shape, gather]() mutable {
      auto& gx = x.storage()->ensure_grad();
      const T* g = result.grad().data();
      for_each_strided(out_shape, gather, 0, [&](Index o, Index i) { gx[static_cast<std::size_t>(i)] += g[o]; });
    });
  }
  return result;
}

template <typename T>
Tensor<T> crop(const Tensor<T>& x, const Shape& offsets, const Shape& extents) {
  const std::size_t rank = x.shape().size();
  if (offsets.size() != rank || extents.size() != rank) throw ShapeError("crop rank mismatch");
  check_shape(extents);
  const auto in_strides = strides_of(x.shape());
  Index base = 0;
  for (std::size_t a = 0; a < rank; ++a) {
    if (offsets[a] < 0 || offsets[a] + extents[a] > x.shape()[a]) {
      throw ShapeError("crop window exceeds " + to_string(x.shape()));
    }
    base += offsets[a] * in_strides[a];
  }
  std::vector<T> out(static_cast<std::size_t>(numel(extents)));
  const T* src = x.data().data();
  for_each_strided(extents, in_strides, base, [&](Index o, Index i) { out[static_cast<std::size_t>(o)] = src[i]; });
  const bool rec = detail::should_record<T>({&x});
  auto result = detail::make_result<T>(extents, std::move(out), rec);
  if (rec) {
    detail::record<T>("crop", {&x}, result, [x, result, extents, in_strides, base]() mutable {
      auto& gx = x.storage()->ensure_grad();
      const T* g = result.grad().data();
      for_each_strided(extents, in_strides, base, [&](Index o, Index i) { gx[static_cast<std::size_t>(i)] += g[o]; });
    });
  }
  return result;
}

template <typename T>
Tensor<T> pad(const Tensor<T>& x, const std::vector<std::pair<Index, Index>>& amounts) {
  const std::size_t rank = x.shape().size();
  if (amounts.size() != rank) throw ShapeError("pad needs one (before, after) pair per axis");
  Shape out_shape(rank);
  Shape offsets(rank);
  for (std::size_t a = 0; a < rank; ++a) {
    if (amounts[a].first < 0 || amounts[a].second < 0) throw ShapeError("negative pad amount");
    out_shape[a] = x.shape()[a] + amounts[a].first + amounts[a].second;
    offsets[a] = amounts[a].first;
  }
  const auto out_strides = strides_of(out_shape);
  Index base = 0;
  for (std::size_t a = 0; a < rank; ++a) base += offsets[a] * out_strides[a];
  std::vector<T> out(static_cast<std::size_t>(numel(out_shape)), T(0));
  const T* src = x.data().data();
  // Scatter: iterate the input shape, addressing the output with its strides.
  for_each_strided(x.shape(), out_strides, base, [&](Index i, Index o) { out[static_cast<std::size_t>(o)] = src[i]; });
  const bool rec = detail::should_record<T>({&x});
  auto result = detail::make_result<T>(out_shape, std::move(out), rec);
  if (rec) {
    detail::record<T>("pad", {&x}, result, [x, result, out_strides, base]() mutable {
      auto& gx = x.storage()->ensure_grad();
      const T* g = result.grad().data();
      for_each_strided(x.shape(), out_strides, base, [&](Index i, Index o) { gx[static_cast<std::size_t>(i)] += g[o]; });
    });
  }
  return result;
}

template <typename T>
Tensor<T> repeat_interleave(const Tensor<T>& x, int axis, Index factor) {
  if (factor < 1) throw ShapeError("repeat factor must be >= 1");
  const auto v = detail::axis_view(x.shape(), axis);
  Shape out_shape = x.shape();
  const int a = axis < 0 ? axis + x.rank() : axis;
  out_shape[static_cast<std::size_t>(a)] *= factor;
  std::vector<T> out(static_cast<std::size_t>(x.numel() * factor));
  const T* src = x.data().data();
  for (Index o = 0; o < v.outer; ++o) {
    for (Index e = 0; e < v.extent; ++e) {
      const T* row = src + (o * v.extent + e) * v.inner;
      for (Index r = 0; r < factor; ++r) {
        std::copy(row, row + v.inner, out.begin() + ((o * v.extent + e) * factor + r) * v.inner);
      }
    }
  }
  const bool rec = detail::should_record<T>({&x});
  auto result = detail::make_result<T>(out_shape, std::move(out), rec);
  if (rec) {
    detail::record<T>("repeat_interleave", {&x}, result, [x, result, v, factor]() mutable {
      auto& gx = x.storage()->ensure_grad();
      const T* g = result.grad().data();
      for (Index o = 0; o < v.outer; ++o) {
        for (Index e = 0; e < v.extent; ++e) {
          T* dst = gx.data() + (o * v.extent + e) * v.inner;
          for (Index r = 0; r < factor; ++r) {
            kernels::axpy(T(1), g + ((o * v.extent + e) * factor + r) * v.inner, dst, v.inner);
          }
        }
      }
    });
  }
  return result;
}

namespace {

template <typename T>
Tensor<T> pad_spatial(const Tensor<T>& x, Index block) {
  const Index h = x.dim(2), w = x.dim(3);
  const Index hp = padded_extent(h, block), wp = padded_extent(w, block);
  if (hp == h && wp == w) return x;
  return pad(x, {{0, 0}, {0, 0}, {0, hp - h}, {0, wp - w}});
}

void check_partition_input(const Shape& shape, Index block, const char* what) {
  if (block <= 0) throw ConfigError(std::string(what) + " size must be positive, got " + std::to_string(block));
  if (shape.size() != 4) throw ShapeError(std::string(what) + " partition expects [B,C,H,W], got " + to_string(shape));
}

}  // namespace

template <typename T>
Tensor<T> window_partition(const Tensor<T>& x, Index window) {
  check_partition_input(x.shape(), window, "window");
  const Tensor<T> xp = pad_spatial(x, window);
  const Index b = xp.dim(0), c = xp.dim(1), hp = xp.dim(2), wp = xp.dim(3);
  const Index nh = hp / window, nw = wp / window;
  // [B,C,nh,P,nw,P] -> [B,nh,nw,P,P,C]
  auto t = reshape(xp, {b, c, nh, window, nw, window});
  t = permute(t, {0, 2, 4, 3, 5, 1});
  return reshape(t, {b * nh * nw, window * window, c});
}

template <typename T>
Tensor<T> window_reverse(const Tensor<T>& windows, Index window, const Shape& original) {
  check_partition_input(original, window, "window");
  const Index b = original[0], c = original[1], h = original[2], w = original[3];
  const Index hp = padded_extent(h, window), wp = padded_extent(w, window);
  const Index nh = hp / window, nw = wp / window;
  if (windows.shape() != Shape{b * nh * nw, window * window, c}) {
    throw ShapeError("window_reverse: " + to_string(windows.shape()) + " does not match " + to_string(original));
  }
  auto t = reshape(windows, {b, nh, nw, window, window, c});
  t = permute(t, {0, 5, 1, 3, 2, 4});
  t = reshape(t, {b, c, hp, wp});
  if (hp == h && wp == w) return t;
  return crop(t, {0, 0, 0, 0}, {b, c, h, w});
}

template <typename T>
Tensor<T> grid_partition(const Tensor<T>& x, Index grid) {
  check_partition_input(x.shape(), grid, "grid");
  const Tensor<T> xp = pad_spatial(x, grid);
  const Index b = xp.dim(0), c = xp.dim(1), hp = xp.dim(2), wp = xp.dim(3);
  const Index sh = hp / grid, sw = wp / grid;
  // row = i*sh + u: [B,C,G,sh,G,sw] -> [B,sh,sw,G,G,C]
  auto t = reshape(xp, {b, c, grid, sh, grid, sw});
  t = permute(t, {0, 3, 5, 2, 4, 1});
  return reshape(t, {b * sh * sw, grid * grid, c});
}

template <typename T>
Tensor<T> grid_reverse(const Tensor<T>& groups, Index grid, const Shape& original) {
  check_partition_input(original, grid, "grid");
  const Index b = original[0], c = original[1], h = original[2], w = original[3];
  const Index hp = padded_extent(h, grid), wp = padded_extent(w, grid);
  const Index sh = hp / grid, sw = wp / grid;
  if (groups.shape() != Shape{b * sh * sw, grid * grid, c}) {
    throw ShapeError("grid_reverse: " + to_string(groups.shape()) + " does not match " + to_string(original));
  }
  auto t = reshape(groups, {b, sh, sw, grid, grid, c});
  t = permute(t, {0, 5, 3, 1, 4, 2});
  t = reshape(t, {b, c, hp, wp});
  if (hp == h && wp == w) return t;
  return crop(t, {0, 0, 0, 0}, {b, c, h, w});
}

#define RADAR_INSTANTIATE(T)                                                                    \
  template Tensor<T> reshape<T>(const Tensor<T>&, const Shape&);                                \
  template Tensor<T> permute<T>(const Tensor<T>&, const std::vector<int>&);                     \
  template Tensor<T> pad<T>(const Tensor<T>&, const std::vector<std::pair<Index, Index>>&);      \
  template Tensor<T> crop<T>(const Tensor<T>&, const Shape&, const Shape&);                     \
  template Tensor<T> repeat_interleave<T>(const Tensor<T>&, int, Index);                        \
  template Tensor<T> window_partition<T>(const Tensor<T>&, Index);                              \
  template Tensor<T> window_reverse<T>(const Tensor<T>&, Index, const Shape&);                  \
  template Tensor<T> grid_partition<T>(const Tensor<T>&, Index);                                \
  template Tensor<T> grid_reverse<T>(const Tensor<T>&, Index, const Shape&);

RADAR_INSTANTIATE(float)
RADAR_INSTANTIATE(double)
#undef RADAR_INSTANTIATE

}  // namespace radar
