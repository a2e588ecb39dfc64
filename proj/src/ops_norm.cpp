#include <cmath>

#include "ops_internal.hpp"
#include "radarformer/ops.hpp"

namespace radar {

namespace {

void check_eps(double eps) {
  if (!(eps > 0.0)) throw ConfigError("normalization eps must be positive");
}

template <typename T>
void check_affine(const Tensor<T>& gamma, const Tensor<T>& beta, Index extent, const char* op) {
  if (gamma.shape() != Shape{extent} || beta.shape() != Shape{extent}) {
    throw ShapeError(std::string(op) + ": scale/shift must have shape [" + std::to_string(extent) + "]");
  }
}

}  // namespace

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, int axis, double eps) {
  check_eps(eps);
  const auto v = detail::axis_view(x.shape(), axis);
  check_affine(gamma, beta, v.extent, "layer_norm");
  const auto in = x.data();
  const auto gm = gamma.data();
  const auto bt = beta.data();
  std::vector<T> out(in.size());
  std::vector<T> xhat(in.size());
  std::vector<T> inv_std(static_cast<std::size_t>(v.outer * v.inner));
  for (Index o = 0; o < v.outer; ++o) {
    for (Index i = 0; i < v.inner; ++i) {
      const Index base = o * v.extent * v.inner + i;
      T mu = T(0);
      for (Index e = 0; e < v.extent; ++e) mu += in[base + e * v.inner];
      mu /= static_cast<T>(v.extent);
      T var = T(0);
      for (Index e = 0; e < v.extent; ++e) {
        const T d = in[base + e * v.inner] - mu;
        var += d * d;
      }
      var /= static_cast<T>(v.extent);
      const T is = T(1) / std::sqrt(var + static_cast<T>(eps));
      inv_std[static_cast<std::size_t>(o * v.inner + i)] = is;
      for (Index e = 0; e < v.extent; ++e) {
        const Index j = base + e * v.inner;
        xhat[j] = (in[j] - mu) * is;
        out[j] = gm[e] * xhat[j] + bt[e];
      }
    }
  }
  const bool rec = detail::should_record<T>({&x, &gamma, &beta});
  auto result = detail::make_result<T>(x.shape(), std::move(out), rec);
  if (rec) {
    detail::record<T>("layer_norm", {&x, &gamma, &beta}, result,
                      [x, gamma, beta, result, v, xhat = std::move(xhat), inv_std = std::move(inv_std)]() mutable {
      const auto g = result.grad();
      const auto gm = gamma.data();
      T* gx = x.requires_grad() ? x.storage()->ensure_grad().data() : nullptr;
      T* gg = gamma.requires_grad() ? gamma.storage()->ensure_grad().data() : nullptr;
      T* gb = beta.requires_grad() ? beta.storage()->ensure_grad().data() : nullptr;
      const T n = static_cast<T>(v.extent);
      for (Index o = 0; o < v.outer; ++o) {
        for (Index i = 0; i < v.inner; ++i) {
          const Index base = o * v.extent * v.inner + i;
          T sum_d = T(0), sum_dx = T(0);
          for (Index e = 0; e < v.extent; ++e) {
            const Index j = base + e * v.inner;
            const T d = g[j] * gm[e];
            sum_d += d;
            sum_dx += d * xhat[j];
            if (gg) gg[e] += g[j] * xhat[j];
            if (gb) gb[e] += g[j];
          }
          if (gx) {
            const T is = inv_std[static_cast<std::size_t>(o * v.inner + i)];
            for (Index e = 0; e < v.extent; ++e) {
              const Index j = base + e * v.inner;
              const T d = g[j] * gm[e];
              gx[j] += is / n * (n * d - sum_d - xhat[j] * sum_dx);
            }
          }
        }
      }
    });
  }
  detail::check_finite(result, "layer_norm");
  return result;
}

template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, BatchNormStats<T>& stats,
                     bool training, double eps) {
  check_eps(eps);
  if (x.rank() < 2) throw ShapeError("batch_norm expects [B, C, ...]");
  const Index batch = x.dim(0), channels = x.dim(1);
  const Index inner = x.numel() / (batch * channels);
  check_affine(gamma, beta, channels, "batch_norm");
  if (!stats.running_mean.defined()) {
    stats.running_mean = Tensor<T>::zeros({channels});
    stats.running_var = Tensor<T>::constant({channels}, T(1));
  }
  if (stats.running_mean.shape() != Shape{channels}) throw ShapeError("batch_norm running statistics extent mismatch");
  const auto in = x.data();
  const Index count = batch * inner;
  std::vector<T> mu(static_cast<std::size_t>(channels)), inv_std(static_cast<std::size_t>(channels));
  auto rm = stats.running_mean.mutable_data();
  auto rv = stats.running_var.mutable_data();
  for (Index c = 0; c < channels; ++c) {
    if (training) {
      T m = T(0);
      for (Index b = 0; b < batch; ++b) {
        const T* p = in.data() + (b * channels + c) * inner;
        for (Index i = 0; i < inner; ++i) m += p[i];
      }
      m /= static_cast<T>(count);
      T var = T(0);
      for (Index b = 0; b < batch; ++b) {
        const T* p = in.data() + (b * channels + c) * inner;
        for (Index i = 0; i < inner; ++i) var += (p[i] - m) * (p[i] - m);
      }
      const T biased = var / static_cast<T>(count);
      const T unbiased = count > 1 ? var / static_cast<T>(count - 1) : biased;
      const T mom = static_cast<T>(stats.momentum);
      rm[c] = (T(1) - mom) * rm[c] + mom * m;
      rv[c] = (T(1) - mom) * rv[c] + mom * unbiased;
      mu[c] = m;
      inv_std[c] = T(1) / std::sqrt(biased + static_cast<T>(eps));
    } else {
      mu[c] = rm[c];
      inv_std[c] = T(1) / std::sqrt(rv[c] + static_cast<T>(eps));
    }
  }
  std::vector<T> out(in.size()), xhat(in.size());
  const auto gm = gamma.data();
  const auto bt = beta.data();
  for (Index b = 0; b < batch; ++b) {
    for (Index c = 0; c < channels; ++c) {
      const Index base = (b * channels + c) * inner;
      for (Index i = 0; i < inner; ++i) {
        xhat[base + i] = (in[base + i] - mu[c]) * inv_std[c];
        out[base + i] = gm[c] * xhat[base + i] + bt[c];
      }
    }
  }
  const bool rec = detail::should_record<T>({&x, &gamma, &beta});
  auto result = detail::make_result<T>(x.shape(), std::move(out), rec);
  if (rec) {
    detail::record<T>("batch_norm", {&x, &gamma, &beta}, result,
                      [x, gamma, beta, result, batch, channels, inner, training, xhat = std::move(xhat),
                       inv_std = std::move(inv_std)]() mutable {
      const auto g = result.grad();
      const auto gm = gamma.data();
      T* gx = x.requires_grad() ? x.storage()->ensure_grad().data() : nullptr;
      T* gg = gamma.requires_grad() ? gamma.storage()->ensure_grad().data() : nullptr;
      T* gb = beta.requires_grad() ? beta.storage()->ensure_grad().data() : nullptr;
      const T n = static_cast<T>(batch * inner);
      for (Index c = 0; c < channels; ++c) {
        T sum_g = T(0), sum_gx = T(0);
        for (Index b = 0; b < batch; ++b) {
          const Index base = (b * channels + c) * inner;
          for (Index i = 0; i < inner; ++i) {
            sum_g += g[base + i];
            sum_gx += g[base + i] * xhat[base + i];
          }
        }
        if (gg) gg[c] += sum_gx;
        if (gb) gb[c] += sum_g;
        if (!gx) continue;
        const T k = gm[c] * inv_std[c];
        for (Index b = 0; b < batch; ++b) {
          const Index base = (b * channels + c) * inner;
          for (Index i = 0; i < inner; ++i) {
            if (training) {
              gx[base + i] += k / n * (n * g[base + i] - sum_g - xhat[base + i] * sum_gx);
            } else {
              gx[base + i] += k * g[base + i];
            }
          }
        }
      }
    });
  }
  detail::check_finite(result, "batch_norm");
  return result;
}

#define RADAR_INSTANTIATE(T)                                                                                  \
  template Tensor<T> layer_norm<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, double);        \
  template Tensor<T> batch_norm<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, BatchNormStats<T>&, \
                                   bool, double);

RADAR_INSTANTIATE(float)
RADAR_INSTANTIATE(double)
#undef RADAR_INSTANTIATE

}  // namespace radar
