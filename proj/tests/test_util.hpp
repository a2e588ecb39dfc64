#pragma once
// Shared helpers and brute-force oracles for the test suites. The oracles
// are deliberately naive loops, independent of the im2col/GEMM kernels.

#include <cmath>
#include <cstdint>
#include <vector>

#include "radarformer/ops.hpp"
#include "radarformer/rng.hpp"
#include "radarformer/tensor.hpp"

namespace radar::testing {

template <typename T = double>
Tensor<T> random_tensor(const Shape& shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0,
                        bool requires_grad = false) {
  auto t = create<T>(shape, init::SeededUniform{seed, lo, hi});
  t.set_requires_grad(requires_grad);
  return t;
}

template <typename T>
double max_abs_diff(std::span<const T> a, std::span<const T> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(double(a[i]) - double(b[i])));
  return m;
}

inline std::vector<double> matmul_oracle(const std::vector<double>& a, const std::vector<double>& b, Index m, Index k,
                                         Index n) {
  std::vector<double> c(static_cast<std::size_t>(m * n), 0.0);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) {
      double acc = 0.0;
      for (Index p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      c[i * n + j] = acc;
    }
  return c;
}

// Direct 6-nested-loop 2D cross-correlation (batch and bias loops on top).
inline std::vector<double> conv2d_oracle(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& bias,
                                         Index stride, Index padding) {
  const Index B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const Index O = w.dim(0), KH = w.dim(2), KW = w.dim(3);
  const Index HO = (H + 2 * padding - KH) / stride + 1, WO = (W + 2 * padding - KW) / stride + 1;
  std::vector<double> y(static_cast<std::size_t>(B * O * HO * WO), 0.0);
  for (Index b = 0; b < B; ++b)
    for (Index o = 0; o < O; ++o)
      for (Index i = 0; i < HO; ++i)
        for (Index j = 0; j < WO; ++j) {
          double acc = bias.defined() ? bias.data()[o] : 0.0;
          for (Index c = 0; c < C; ++c)
            for (Index u = 0; u < KH; ++u)
              for (Index v = 0; v < KW; ++v) {
                const Index r = i * stride - padding + u, s = j * stride - padding + v;
                if (r < 0 || r >= H || s < 0 || s >= W) continue;
                acc += x.at({b, c, r, s}) * w.at({o, c, u, v});
              }
          y[((b * O + o) * HO + i) * WO + j] = acc;
        }
  return y;
}

// Direct 8-nested-loop 3D cross-correlation.
inline std::vector<double> conv3d_oracle(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& bias,
                                         std::array<Index, 3> stride, std::array<Index, 3> padding) {
  const Index B = x.dim(0), C = x.dim(1), D = x.dim(2), H = x.dim(3), W = x.dim(4);
  const Index O = w.dim(0), KD = w.dim(2), KH = w.dim(3), KW = w.dim(4);
  const Index DO = (D + 2 * padding[0] - KD) / stride[0] + 1;
  const Index HO = (H + 2 * padding[1] - KH) / stride[1] + 1;
  const Index WO = (W + 2 * padding[2] - KW) / stride[2] + 1;
  std::vector<double> y(static_cast<std::size_t>(B * O * DO * HO * WO), 0.0);
  for (Index b = 0; b < B; ++b)
    for (Index o = 0; o < O; ++o)
      for (Index t = 0; t < DO; ++t)
        for (Index i = 0; i < HO; ++i)
          for (Index j = 0; j < WO; ++j) {
            double acc = bias.defined() ? bias.data()[o] : 0.0;
            for (Index c = 0; c < C; ++c)
              for (Index a = 0; a < KD; ++a)
                for (Index u = 0; u < KH; ++u)
                  for (Index v = 0; v < KW; ++v) {
                    const Index q = t * stride[0] - padding[0] + a;
                    const Index r = i * stride[1] - padding[1] + u;
                    const Index s = j * stride[2] - padding[2] + v;
                    if (q < 0 || q >= D || r < 0 || r >= H || s < 0 || s >= W) continue;
                    acc += x.at({b, c, q, r, s}) * w.at({o, c, a, u, v});
                  }
            y[(((b * O + o) * DO + t) * HO + i) * WO + j] = acc;
          }
  return y;
}

}  // namespace radar::testing
