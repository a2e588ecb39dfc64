// Convolution via tiled im2col + GEMM. Columns are materialized one tile of
// output positions at a time so memory stays bounded for large 3D inputs.

#include <algorithm>

#include "ops_internal.hpp"
#include "radarformer/ops.hpp"

namespace radar {

Index conv_output_extent(Index input, Index kernel, Index stride, Index padding) {
  if (kernel < 1 || stride < 1 || padding < 0) {
    throw ShapeError("invalid convolution geometry (kernel " + std::to_string(kernel) + ", stride " +
                     std::to_string(stride) + ", padding " + std::to_string(padding) + ")");
  }
  const Index span = input + 2 * padding - kernel;
  if (span < 0) {
    throw ShapeError("kernel " + std::to_string(kernel) + " larger than padded input " +
                     std::to_string(input + 2 * padding));
  }
  return span / stride + 1;
}

namespace {

constexpr Index kColumnBudget = Index{1} << 24;  // elements per im2col tile
constexpr Index kMinTile = 256;

struct ConvGeometry {
  Index batch = 1, cin = 1, cout = 1;
  std::array<Index, 3> in{1, 1, 1};
  std::array<Index, 3> kernel{1, 1, 1};
  std::array<Index, 3> stride{1, 1, 1};
  std::array<Index, 3> pad{0, 0, 0};
  std::array<Index, 3> out{1, 1, 1};

  Index in_size() const { return in[0] * in[1] * in[2]; }
  Index out_size() const { return out[0] * out[1] * out[2]; }
  Index rows() const { return cin * kernel[0] * kernel[1] * kernel[2]; }
  bool pointwise() const {
    return kernel == std::array<Index, 3>{1, 1, 1} && stride == std::array<Index, 3>{1, 1, 1} &&
           pad == std::array<Index, 3>{0, 0, 0};
  }
  Index tile() const {
    const Index t = std::max(kMinTile, kColumnBudget / std::max<Index>(rows(), 1));
    return std::min(t, out_size());
  }
};

// Output positions of a tile grouped into runs along the innermost axis.
struct Segment {
  Index q = 0;         // first column of the run within the tile
  Index d = 0, h = 0;  // input origin of the run before kernel offsets
  Index ow = 0;        // first output index along the innermost axis
  Index len = 0;
};

using TileOrigins = std::vector<Segment>;

TileOrigins tile_origins(const ConvGeometry& g, Index p0, Index count) {
  TileOrigins segs;
  const Index plane = g.out[1] * g.out[2];
  Index q = 0;
  while (q < count) {
    const Index p = p0 + q;
    const Index rem = p % plane;
    Segment s;
    s.q = q;
    s.d = (p / plane) * g.stride[0] - g.pad[0];
    s.h = (rem / g.out[2]) * g.stride[1] - g.pad[1];
    s.ow = rem % g.out[2];
    s.len = std::min(g.out[2] - s.ow, count - q);
    segs.push_back(s);
    q += s.len;
  }
  return segs;
}

// Range [lo, hi) of run offsets whose input column ow*stride - pad + e is inside [0, in).
inline void valid_range(const ConvGeometry& g, const Segment& s, Index e, Index& lo, Index& hi) {
  const Index st = g.stride[2];
  const Index base = s.ow * st - g.pad[2] + e;
  lo = std::min(s.len, base >= 0 ? Index{0} : (-base + st - 1) / st);
  const Index last = g.in[2] - 1 - base;  // need base + j*st <= in-1
  hi = last < 0 ? 0 : std::min(s.len, last / st + 1);
  if (hi < lo) hi = lo;
}

template <typename T>
void im2col(const ConvGeometry& g, const TileOrigins& segs, const T* x, Index count, T* col) {
  Index row = 0;
  const Index st = g.stride[2];
  for (Index c = 0; c < g.cin; ++c) {
    const T* xc = x + c * g.in_size();
    for (Index a = 0; a < g.kernel[0]; ++a) {
      for (Index b = 0; b < g.kernel[1]; ++b) {
        for (Index e = 0; e < g.kernel[2]; ++e, ++row) {
          T* dst = col + row * count;
          for (const auto& s : segs) {
            T* out = dst + s.q;
            const Index id = s.d + a, ih = s.h + b;
            if (id < 0 || id >= g.in[0] || ih < 0 || ih >= g.in[1]) {
              std::fill(out, out + s.len, T(0));
              continue;
            }
            Index lo, hi;
            valid_range(g, s, e, lo, hi);
            std::fill(out, out + lo, T(0));
            const Index base = (id * g.in[1] + ih) * g.in[2] + s.ow * st - g.pad[2] + e;
            if (st == 1) {
              std::copy(xc + base + lo, xc + base + hi, out + lo);
            } else {
              for (Index j = lo; j < hi; ++j) out[j] = xc[base + j * st];
            }
            std::fill(out + hi, out + s.len, T(0));
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const ConvGeometry& g, const TileOrigins& segs, const T* col, Index count, T* dx) {
  Index row = 0;
  const Index st = g.stride[2];
  for (Index c = 0; c < g.cin; ++c) {
    T* dxc = dx + c * g.in_size();
    for (Index a = 0; a < g.kernel[0]; ++a) {
      for (Index b = 0; b < g.kernel[1]; ++b) {
        for (Index e = 0; e < g.kernel[2]; ++e, ++row) {
          const T* src = col + row * count;
          for (const auto& s : segs) {
            const Index id = s.d + a, ih = s.h + b;
            if (id < 0 || id >= g.in[0] || ih < 0 || ih >= g.in[1]) continue;
            Index lo, hi;
            valid_range(g, s, e, lo, hi);
            const Index base = (id * g.in[1] + ih) * g.in[2] + s.ow * st - g.pad[2] + e;
            const T* in = src + s.q;
            if (st == 1) {
              if (hi > lo) kernels::axpy(T(1), in + lo, dxc + base + lo, hi - lo);
            } else {
              for (Index j = lo; j < hi; ++j) dxc[base + j * st] += in[j];
            }
          }
        }
      }
    }
  }
}

template <typename T>
Tensor<T> conv_core(const char* name, const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                    const ConvGeometry& g, Shape out_shape) {
  const Index rows = g.rows();
  const Index positions = g.out_size();
  std::vector<T> out(static_cast<std::size_t>(g.batch * g.cout * positions));
  const T* w = weight.data().data();
  std::vector<T> col;
  for (Index b = 0; b < g.batch; ++b) {
    const T* xb = x.data().data() + b * g.cin * g.in_size();
    T* yb = out.data() + b * g.cout * positions;
    if (g.pointwise()) {
      kernels::gemm(false, false, g.cout, positions, g.cin, w, rows, xb, positions, yb, positions, false);
      continue;
    }
    const Index tile = g.tile();
    for (Index p0 = 0; p0 < positions; p0 += tile) {
      const Index count = std::min(tile, positions - p0);
      col.resize(static_cast<std::size_t>(rows * count));
      im2col(g, tile_origins(g, p0, count), xb, count, col.data());
      kernels::gemm(false, false, g.cout, count, rows, w, rows, col.data(), count, yb + p0, positions, false);
    }
  }
  if (bias.defined()) {
    for (Index b = 0; b < g.batch; ++b) {
      for (Index c = 0; c < g.cout; ++c) {
        T* yc = out.data() + (b * g.cout + c) * positions;
        const T bc = bias.data()[static_cast<std::size_t>(c)];
        for (Index p = 0; p < positions; ++p) yc[p] += bc;
      }
    }
  }
  const bool rec = detail::should_record<T>({&x, &weight, &bias});
  auto result = detail::make_result<T>(std::move(out_shape), std::move(out), rec);
  if (rec) {
    detail::record<T>(name, {&x, &weight, &bias}, result, [x, weight, bias, result, g]() mutable {
      const Index rows = g.rows();
      const Index positions = g.out_size();
      const T* dy = result.grad().data();
      const T* w = weight.data().data();
      T* dw = weight.requires_grad() ? weight.storage()->ensure_grad().data() : nullptr;
      T* dx = x.requires_grad() ? x.storage()->ensure_grad().data() : nullptr;
      std::vector<T> col, dcol;
      for (Index b = 0; b < g.batch; ++b) {
        const T* xb = x.data().data() + b * g.cin * g.in_size();
        const T* dyb = dy + b * g.cout * positions;
        if (g.pointwise()) {
          if (dw) kernels::gemm(false, true, g.cout, g.cin, positions, dyb, positions, xb, positions, dw, rows, true);
          if (dx) {
            kernels::gemm(true, false, g.cin, positions, g.cout, w, rows, dyb, positions,
                          dx + b * g.cin * g.in_size(), positions, true);
          }
          continue;
        }
        const Index tile = g.tile();
        for (Index p0 = 0; p0 < positions; p0 += tile) {
          const Index count = std::min(tile, positions - p0);
          const TileOrigins origins = tile_origins(g, p0, count);
          if (dw) {
            col.resize(static_cast<std::size_t>(rows * count));
            im2col(g, origins, xb, count, col.data());
            kernels::gemm(false, true, g.cout, rows, count, dyb + p0, positions, col.data(), count, dw, rows, true);
          }
          if (dx) {
            dcol.resize(static_cast<std::size_t>(rows * count));
            kernels::gemm(true, false, rows, count, g.cout, w, rows, dyb + p0, positions, dcol.data(), count, false);
            col2im(g, origins, dcol.data(), count, dx + b * g.cin * g.in_size());
          }
        }
      }
      if (bias.defined() && bias.requires_grad()) {
        auto& db = bias.storage()->ensure_grad();
        for (Index b = 0; b < g.batch; ++b) {
          for (Index c = 0; c < g.cout; ++c) {
            const T* dyc = dy + (b * g.cout + c) * positions;
            T acc = T(0);
            for (Index p = 0; p < positions; ++p) acc += dyc[p];
            db[static_cast<std::size_t>(c)] += acc;
          }
        }
      }
    });
  }
  detail::check_finite(result, name);
  return result;
}

template <typename T>
void check_bias(const Tensor<T>& bias, Index cout) {
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != cout)) {
    throw ShapeError("convolution bias must have shape [" + std::to_string(cout) + "]");
  }
}

void check_odd(Index k) {
  if (k % 2 == 0) throw ShapeError("convolution kernels must have odd extents, got " + std::to_string(k));
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::array<Index, 2> stride, std::array<Index, 2> padding) {
  if (x.rank() != 4 || weight.rank() != 4) throw ShapeError("conv2d expects x[B,C,H,W] and w[O,C,kh,kw]");
  if (weight.dim(1) != x.dim(1)) {
    throw ShapeError("conv2d channel mismatch: x " + to_string(x.shape()) + ", w " + to_string(weight.shape()));
  }
  check_odd(weight.dim(2));
  check_odd(weight.dim(3));
  check_bias(bias, weight.dim(0));
  ConvGeometry g;
  g.batch = x.dim(0);
  g.cin = x.dim(1);
  g.cout = weight.dim(0);
  g.in = {1, x.dim(2), x.dim(3)};
  g.kernel = {1, weight.dim(2), weight.dim(3)};
  g.stride = {1, stride[0], stride[1]};
  g.pad = {0, padding[0], padding[1]};
  g.out = {1, conv_output_extent(g.in[1], g.kernel[1], stride[0], padding[0]),
           conv_output_extent(g.in[2], g.kernel[2], stride[1], padding[1])};
  return conv_core("conv2d", x, weight, bias, g, Shape{g.batch, g.cout, g.out[1], g.out[2]});
}

template <typename T>
Tensor<T> conv3d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::array<Index, 3> stride, std::array<Index, 3> padding) {
  if (x.rank() != 5 || weight.rank() != 5) throw ShapeError("conv3d expects x[B,C,T,H,W] and w[O,C,kt,kh,kw]");
  if (weight.dim(1) != x.dim(1)) {
    throw ShapeError("conv3d channel mismatch: x " + to_string(x.shape()) + ", w " + to_string(weight.shape()));
  }
  for (int a = 2; a < 5; ++a) check_odd(weight.dim(a));
  check_bias(bias, weight.dim(0));
  ConvGeometry g;
  g.batch = x.dim(0);
  g.cin = x.dim(1);
  g.cout = weight.dim(0);
  g.in = {x.dim(2), x.dim(3), x.dim(4)};
  g.kernel = {weight.dim(2), weight.dim(3), weight.dim(4)};
  g.stride = stride;
  g.pad = padding;
  for (std::size_t a = 0; a < 3; ++a) g.out[a] = conv_output_extent(g.in[a], g.kernel[a], stride[a], padding[a]);
  return conv_core("conv3d", x, weight, bias, g, Shape{g.batch, g.cout, g.out[0], g.out[1], g.out[2]});
}

#define RADAR_INSTANTIATE(T)                                                                     \
  template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,             \
                               std::array<Index, 2>, std::array<Index, 2>);                      \
  template Tensor<T> conv3d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,             \
                               std::array<Index, 3>, std::array<Index, 3>);

RADAR_INSTANTIATE(float)
RADAR_INSTANTIATE(double)
#undef RADAR_INSTANTIATE

}  // namespace radar
