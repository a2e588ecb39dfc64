#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "radarformer/kernels.hpp"
#include "radarformer/ops.hpp"
#include "ops_internal.hpp"

namespace radar {

namespace {

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

using detail::axis_view;
using detail::AxisView;

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  std::vector<T> out(a.data().size());
  kernels::add(a.data().data(), b.data().data(), out.data(), a.numel());
  const bool rec = detail::should_record<T>({&a, &b});
  auto result = detail::make_result<T>(a.shape(), std::move(out), rec);
  if (rec) {
    detail::record<T>("add", {&a, &b}, result, [a, b, result]() mutable {
      const auto g = result.grad();
      if (a.requires_grad()) detail::accumulate_grad(a, g);
      if (b.requires_grad()) detail::accumulate_grad(b, g);
    });
  }
  detail::check_finite(result, "add");
  return result;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  std::vector<T> out(a.data().size());
  kernels::mul(a.data().data(), b.data().data(), out.data(), a.numel());
  const bool rec = detail::should_record<T>({&a, &b});
  auto result = detail::make_result<T>(a.shape(), std::move(out), rec);
  if (rec) {
    detail::record<T>("mul", {&a, &b}, result, [a, b, result]() mutable {
      const auto g = result.grad();
      std::vector<T> tmp(g.size());
      if (a.requires_grad()) {
        kernels::mul(g.data(), b.data().data(), tmp.data(), a.numel());
        detail::accumulate_grad(a, std::span<const T>(tmp));
      }
      if (b.requires_grad()) {
        kernels::mul(g.data(), a.data().data(), tmp.data(), a.numel());
        detail::accumulate_grad(b, std::span<const T>(tmp));
      }
    });
  }
  detail::check_finite(result, "mul");
  return result;
}

template <typename T>
Tensor<T> ewise(const Tensor<T>& a, const Tensor<T>& b, EwiseKind kind) {
  return kind == EwiseKind::add ? add(a, b) : mul(a, b);
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  std::vector<T> out(x.data().size());
  kernels::scale(factor, x.data().data(), out.data(), x.numel());
  const bool rec = detail::should_record<T>({&x});
  auto result = detail::make_result<T>(x.shape(), std::move(out), rec);
  if (rec) {
    detail::record<T>("scale", {&x}, result, [x, result, factor]() mutable {
      auto& g = x.storage()->ensure_grad();
      kernels::axpy(factor, result.grad().data(), g.data(), x.numel());
    });
  }
  return result;
}

template <typename T>
Tensor<T> add_trailing(const Tensor<T>& x, const Tensor<T>& b) {
  const auto& xs = x.shape();
  const auto& bs = b.shape();
  if (bs.size() > xs.size() || !std::equal(bs.begin(), bs.end(), xs.end() - static_cast<std::ptrdiff_t>(bs.size()))) {
    throw ShapeError("add_trailing: " + to_string(bs) + " is not a suffix of " + to_string(xs));
  }
  const Index inner = b.numel();
  const Index outer = x.numel() / inner;
  std::vector<T> out(x.data().begin(), x.data().end());
  for (Index o = 0; o < outer; ++o) {
    kernels::add(out.data() + o * inner, b.data().data(), out.data() + o * inner, inner);
  }
  const bool rec = detail::should_record<T>({&x, &b});
  auto result = detail::make_result<T>(xs, std::move(out), rec);
  if (rec) {
    detail::record<T>("add_trailing", {&x, &b}, result, [x, b, result, inner, outer]() mutable {
      const auto g = result.grad();
      if (x.requires_grad()) detail::accumulate_grad(x, g);
      if (b.requires_grad()) {
        auto& gb = b.storage()->ensure_grad();
        for (Index o = 0; o < outer; ++o) kernels::axpy(T(1), g.data() + o * inner, gb.data(), inner);
      }
    });
  }
  return result;
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() < 2 || b.rank() < 2) throw ShapeError("matmul needs rank >= 2 operands");
  const Index m = a.dim(-2), k = a.dim(-1), kb = b.dim(-2), n = b.dim(-1);
  if (k != kb) {
    throw ShapeError("matmul inner extents differ: " + to_string(a.shape()) + " x " + to_string(b.shape()));
  }
  const Shape abatch(a.shape().begin(), a.shape().end() - 2);
  const Shape bbatch(b.shape().begin(), b.shape().end() - 2);
  const std::size_t rank = std::max(abatch.size(), bbatch.size());
  Shape batch(rank, 1);
  for (std::size_t i = 0; i < rank; ++i) {
    const Index ea = i + abatch.size() >= rank ? abatch[i + abatch.size() - rank] : 1;
    const Index eb = i + bbatch.size() >= rank ? bbatch[i + bbatch.size() - rank] : 1;
    if (ea != eb && ea != 1 && eb != 1) {
      throw ShapeError("matmul batch extents not broadcastable: " + to_string(a.shape()) + " x " +
                       to_string(b.shape()));
    }
    batch[i] = std::max(ea, eb);
  }
  const Index nbatch = numel(batch);
  // Offsets (in matrices) of each broadcast batch entry into a and b.
  std::vector<Index> aoff(static_cast<std::size_t>(nbatch)), boff(static_cast<std::size_t>(nbatch));
  for (Index idx = 0; idx < nbatch; ++idx) {
    Index rem = idx, ao = 0, bo = 0, astride = 1, bstride = 1;
    for (std::size_t i = rank; i-- > 0;) {
      const Index coord = rem % batch[i];
      rem /= batch[i];
      const bool in_a = i + abatch.size() >= rank;
      const bool in_b = i + bbatch.size() >= rank;
      if (in_a) {
        const Index ea = abatch[i + abatch.size() - rank];
        if (ea != 1) ao += coord * astride;
        astride *= ea;
      }
      if (in_b) {
        const Index eb = bbatch[i + bbatch.size() - rank];
        if (eb != 1) bo += coord * bstride;
        bstride *= eb;
      }
    }
    aoff[static_cast<std::size_t>(idx)] = ao;
    boff[static_cast<std::size_t>(idx)] = bo;
  }
  Shape out_shape = batch;
  out_shape.push_back(m);
  out_shape.push_back(n);
  std::vector<T> out(static_cast<std::size_t>(nbatch * m * n));
  for (Index idx = 0; idx < nbatch; ++idx) {
    kernels::gemm(false, false, m, n, k, a.data().data() + aoff[idx] * m * k, k,
                  b.data().data() + boff[idx] * k * n, n, out.data() + idx * m * n, n, false);
  }
  const bool rec = detail::should_record<T>({&a, &b});
  auto result = detail::make_result<T>(std::move(out_shape), std::move(out), rec);
  if (rec) {
    detail::record<T>("matmul", {&a, &b}, result, [a, b, result, aoff, boff, m, n, k, nbatch]() mutable {
      const auto g = result.grad();
      if (a.requires_grad()) {
        auto& ga = a.storage()->ensure_grad();
        for (Index idx = 0; idx < nbatch; ++idx) {
          kernels::gemm(false, true, m, k, n, g.data() + idx * m * n, n,
                        b.data().data() + boff[idx] * k * n, n, ga.data() + aoff[idx] * m * k, k, true);
        }
      }
      if (b.requires_grad()) {
        auto& gb = b.storage()->ensure_grad();
        for (Index idx = 0; idx < nbatch; ++idx) {
          kernels::gemm(true, false, k, n, m, a.data().data() + aoff[idx] * m * k, k,
                        g.data() + idx * m * n, n, gb.data() + boff[idx] * k * n, n, true);
        }
      }
    });
  }
  detail::check_finite(result, "matmul");
  return result;
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (weight.rank() != 2) throw ShapeError("linear weight must be [in, out]");
  const Index in = weight.dim(0), outf = weight.dim(1);
  if (x.dim(-1) != in) {
    throw ShapeError("linear: input " + to_string(x.shape()) + " does not match weight " + to_string(weight.shape()));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != outf)) throw ShapeError("linear bias extent mismatch");
  const Index rows = x.numel() / in;
  Shape out_shape = x.shape();
  out_shape.back() = outf;
  std::vector<T> out(static_cast<std::size_t>(rows * outf));
  kernels::gemm(false, false, rows, outf, in, x.data().data(), in, weight.data().data(), outf, out.data(), outf, false);
  if (bias.defined()) {
    for (Index r = 0; r < rows; ++r) kernels::add(out.data() + r * outf, bias.data().data(), out.data() + r * outf, outf);
  }
  const bool rec = detail::should_record<T>({&x, &weight, &bias});
  auto result = detail::make_result<T>(std::move(out_shape), std::move(out), rec);
  if (rec) {
    detail::record<T>("linear", {&x, &weight, &bias}, result, [x, weight, bias, result, rows, in, outf]() mutable {
      const auto g = result.grad();
      if (x.requires_grad()) {
        auto& gx = x.storage()->ensure_grad();
        kernels::gemm(false, true, rows, in, outf, g.data(), outf, weight.data().data(), outf, gx.data(), in, true);
      }
      if (weight.requires_grad()) {
        auto& gw = weight.storage()->ensure_grad();
        kernels::gemm(true, false, in, outf, rows, x.data().data(), in, g.data(), outf, gw.data(), outf, true);
      }
      if (bias.defined() && bias.requires_grad()) {
        auto& gb = bias.storage()->ensure_grad();
        for (Index r = 0; r < rows; ++r) kernels::axpy(T(1), g.data() + r * outf, gb.data(), outf);
      }
    });
  }
  detail::check_finite(result, "linear");
  return result;
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T acc = T(0);
  for (T v : x.data()) acc += v;
  const bool rec = detail::should_record<T>({&x});
  auto result = detail::make_result<T>(Shape{1}, std::vector<T>{acc}, rec);
  if (rec) {
    detail::record<T>("sum", {&x}, result, [x, result]() mutable {
      const T g = result.grad()[0];
      auto& gx = x.storage()->ensure_grad();
      for (auto& v : gx) v += g;
    });
  }
  return result;
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  return scale(sum(x), T(1) / static_cast<T>(x.numel()));
}

template <typename T>
Tensor<T> bce_with_logits(const Tensor<T>& logits, const Tensor<T>& targets) {
  require_same_shape(logits, targets, "bce_with_logits");
  const auto z = logits.data();
  const auto y = targets.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double zi = z[i];
    acc += std::max(zi, 0.0) - zi * static_cast<double>(y[i]) + std::log1p(std::exp(-std::abs(zi)));
  }
  const T n = static_cast<T>(z.size());
  const bool rec = detail::should_record<T>({&logits, &targets});
  auto result = detail::make_result<T>(Shape{1}, std::vector<T>{static_cast<T>(acc / static_cast<double>(n))}, rec);
  if (rec) {
    detail::record<T>("bce_with_logits", {&logits, &targets}, result, [logits, targets, result, n]() mutable {
      const T g = result.grad()[0] / n;
      const auto zz = logits.data();
      const auto yy = targets.data();
      if (logits.requires_grad()) {
        auto& gz = logits.storage()->ensure_grad();
        for (std::size_t i = 0; i < zz.size(); ++i) {
          const T s = zz[i] >= 0 ? T(1) / (T(1) + std::exp(-zz[i])) : std::exp(zz[i]) / (T(1) + std::exp(zz[i]));
          gz[i] += g * (s - yy[i]);
        }
      }
      if (targets.requires_grad()) {
        auto& gy = targets.storage()->ensure_grad();
        for (std::size_t i = 0; i < zz.size(); ++i) gy[i] -= g * zz[i];
      }
    });
  }
  return result;
}

template <typename T>
Tensor<T> activation(const Tensor<T>& x, Activation kind) {
  const auto in = x.data();
  std::vector<T> out(in.size());
  switch (kind) {
    case Activation::relu:
      for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > T(0) ? in[i] : T(0);
      break;
    case Activation::gelu:
      for (std::size_t i = 0; i < in.size(); ++i) {
        out[i] = T(0.5) * in[i] * (T(1) + std::erf(in[i] * static_cast<T>(0.5 * std::numbers::sqrt2)));
      }
      break;
    case Activation::sigmoid: {
      const T lo = std::numeric_limits<T>::min();
      const T hi = std::nextafter(T(1), T(0));
      for (std::size_t i = 0; i < in.size(); ++i) {
        const T v = in[i];
        const T s = v >= 0 ? T(1) / (T(1) + std::exp(-v)) : std::exp(v) / (T(1) + std::exp(v));
        out[i] = std::clamp(s, lo, hi);
      }
      break;
    }
  }
  const bool rec = detail::should_record<T>({&x});
  auto result = detail::make_result<T>(x.shape(), std::move(out), rec);
  if (rec) {
    detail::record<T>("activation", {&x}, result, [x, result, kind]() mutable {
      const auto g = result.grad();
      const auto xin = x.data();
      const auto y = result.data();
      auto& gx = x.storage()->ensure_grad();
      switch (kind) {
        case Activation::relu:
          for (std::size_t i = 0; i < g.size(); ++i) gx[i] += xin[i] > T(0) ? g[i] : T(0);
          break;
        case Activation::gelu: {
          const T inv_sqrt_2pi = static_cast<T>(std::numbers::inv_sqrtpi * 0.5 * std::numbers::sqrt2);
          for (std::size_t i = 0; i < g.size(); ++i) {
            const T v = xin[i];
            const T cdf = T(0.5) * (T(1) + std::erf(v * static_cast<T>(0.5 * std::numbers::sqrt2)));
            const T pdf = inv_sqrt_2pi * std::exp(T(-0.5) * v * v);
            gx[i] += g[i] * (cdf + v * pdf);
          }
          break;
        }
        case Activation::sigmoid:
          for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (T(1) - y[i]);
          break;
      }
    });
  }
  detail::check_finite(result, "activation");
  return result;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, int axis) {
  const AxisView v = axis_view(x.shape(), axis);
  const auto in = x.data();
  std::vector<T> out(in.size());
  for (Index o = 0; o < v.outer; ++o) {
    for (Index i = 0; i < v.inner; ++i) {
      const Index base = o * v.extent * v.inner + i;
      T mx = in[base];
      for (Index e = 1; e < v.extent; ++e) mx = std::max(mx, in[base + e * v.inner]);
      T total = T(0);
      for (Index e = 0; e < v.extent; ++e) {
        const T ex = std::exp(in[base + e * v.inner] - mx);
        out[base + e * v.inner] = ex;
        total += ex;
      }
      const T inv = T(1) / total;
      for (Index e = 0; e < v.extent; ++e) out[base + e * v.inner] *= inv;
    }
  }
  const bool rec = detail::should_record<T>({&x});
  auto result = detail::make_result<T>(x.shape(), std::move(out), rec);
  if (rec) {
    detail::record<T>("softmax", {&x}, result, [x, result, v]() mutable {
      const auto g = result.grad();
      const auto y = result.data();
      auto& gx = x.storage()->ensure_grad();
      for (Index o = 0; o < v.outer; ++o) {
        for (Index i = 0; i < v.inner; ++i) {
          const Index base = o * v.extent * v.inner + i;
          T dotp = T(0);
          for (Index e = 0; e < v.extent; ++e) dotp += g[base + e * v.inner] * y[base + e * v.inner];
          for (Index e = 0; e < v.extent; ++e) {
            const Index j = base + e * v.inner;
            gx[j] += y[j] * (g[j] - dotp);
          }
        }
      }
    });
  }
  detail::check_finite(result, "softmax");
  return result;
}

#define RADAR_INSTANTIATE(T)                                                                    \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> ewise<T>(const Tensor<T>&, const Tensor<T>&, EwiseKind);                   \
  template Tensor<T> scale<T>(const Tensor<T>&, T);                                             \
  template Tensor<T> add_trailing<T>(const Tensor<T>&, const Tensor<T>&);                       \
  template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> linear<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);           \
  template Tensor<T> sum<T>(const Tensor<T>&);                                                  \
  template Tensor<T> mean<T>(const Tensor<T>&);                                                 \
  template Tensor<T> bce_with_logits<T>(const Tensor<T>&, const Tensor<T>&);                    \
  template Tensor<T> activation<T>(const Tensor<T>&, Activation);                               \
  template Tensor<T> softmax<T>(const Tensor<T>&, int);

RADAR_INSTANTIATE(float)
RADAR_INSTANTIATE(double)
#undef RADAR_INSTANTIATE

}  // namespace radar
