#pragma once
// Differentiable tensor operations. All ops are defined for float and double.
// Shapes must match exactly unless an op documents otherwise; there is no
// implicit broadcasting.

#include <array>
#include <utility>
#include <vector>

#include "radarformer/tensor.hpp"

namespace radar {

// ---- arithmetic ------------------------------------------------------------

enum class EwiseKind { add, mul };

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> ewise(const Tensor<T>& a, const Tensor<T>& b, EwiseKind kind);
template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor);
// x + b where b has exactly the trailing extents of x (bias/positional add).
template <typename T>
Tensor<T> add_trailing(const Tensor<T>& x, const Tensor<T>& b);

// Batched a[..., m, k] x b[..., k, n]; batch extents broadcast numpy-style.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
// x[..., in] x w[in, out] (+ bias[out]). Pass an undefined bias for none.
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

template <typename T>
Tensor<T> sum(const Tensor<T>& x);
template <typename T>
Tensor<T> mean(const Tensor<T>& x);
// Mean per-element binary cross-entropy between sigmoid(logits) and targets.
template <typename T>
Tensor<T> bce_with_logits(const Tensor<T>& logits, const Tensor<T>& targets);

// ---- nonlinearities --------------------------------------------------------

enum class Activation { relu, gelu, sigmoid };

template <typename T>
Tensor<T> activation(const Tensor<T>& x, Activation kind);
template <typename T>
Tensor<T> relu(const Tensor<T>& x) { return activation(x, Activation::relu); }
template <typename T>
Tensor<T> gelu(const Tensor<T>& x) { return activation(x, Activation::gelu); }
// Output clamped to the open interval (0, 1).
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) { return activation(x, Activation::sigmoid); }

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, int axis);

// ---- normalization ---------------------------------------------------------

// Normalizes over `axis` for every other index; gamma/beta have the extent
// of that axis.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, int axis,
                     double eps);

template <typename T>
struct BatchNormStats {
  Tensor<T> running_mean;
  Tensor<T> running_var;
  double momentum = 0.1;
};

// Per-channel (axis 1) normalization over batch and all trailing axes. In
// training mode the batch statistics are used and the running statistics are
// updated; otherwise the running statistics are used.
template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     BatchNormStats<T>& stats, bool training, double eps);

// ---- convolution (cross-correlation, no kernel flip) -------------------------

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::array<Index, 2> stride, std::array<Index, 2> padding);
template <typename T>
Tensor<T> conv3d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::array<Index, 3> stride, std::array<Index, 3> padding);

// Output extent of a convolution along one axis, floor((in + 2p - k) / s) + 1;
// throws ShapeError when the kernel exceeds the padded input.
Index conv_output_extent(Index input, Index kernel, Index stride, Index padding);

// ---- layout ----------------------------------------------------------------

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, const Shape& shape);
template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<int>& order);
// Zero padding; one (before, after) pair per axis.
template <typename T>
Tensor<T> pad(const Tensor<T>& x, const std::vector<std::pair<Index, Index>>& amounts);
template <typename T>
Tensor<T> crop(const Tensor<T>& x, const Shape& offsets, const Shape& extents);
// Repeats every element `factor` times along `axis` (nearest upsampling).
template <typename T>
Tensor<T> repeat_interleave(const Tensor<T>& x, int axis, Index factor);

// Non-overlapping P x P windows: [B,C,H,W] -> [B*(Hp/P)*(Wp/P), P*P, C] where
// Hp, Wp are H, W zero-padded up to a multiple of P.
template <typename T>
Tensor<T> window_partition(const Tensor<T>& x, Index window);
// Inverse of window_partition; `original` is the [B,C,H,W] shape before padding.
template <typename T>
Tensor<T> window_reverse(const Tensor<T>& windows, Index window, const Shape& original);

// Dilated G x G grid: token (i, j) of group (u, v) is pixel
// (i*Hp/G + u, j*Wp/G + v). Output [B*(Hp/G)*(Wp/G), G*G, C].
template <typename T>
Tensor<T> grid_partition(const Tensor<T>& x, Index grid);
template <typename T>
Tensor<T> grid_reverse(const Tensor<T>& groups, Index grid, const Shape& original);

}  // namespace radar
