#include "radarformer/kernels.hpp"

namespace radar::kernels::scalar {

template <typename T>
void gemm(bool trans_a, bool trans_b, Index m, Index n, Index k, const T* a, Index lda,
          const T* b, Index ldb, T* c, Index ldc, bool accumulate, std::uint64_t* mac_counter) {
  for (Index i = 0; i < m; ++i) {
    T* crow = c + i * ldc;
    if (!accumulate) {
      for (Index j = 0; j < n; ++j) crow[j] = T(0);
    }
    for (Index p = 0; p < k; ++p) {
      const T aip = trans_a ? a[p * lda + i] : a[i * lda + p];
      if (trans_b) {
        for (Index j = 0; j < n; ++j) {
          crow[j] += aip * b[j * ldb + p];
          if (mac_counter) ++*mac_counter;
        }
      } else {
        const T* brow = b + p * ldb;
        for (Index j = 0; j < n; ++j) {
          crow[j] += aip * brow[j];
          if (mac_counter) ++*mac_counter;
        }
      }
    }
  }
}

template <typename T>
void add(const T* a, const T* b, T* out, Index n) {
  for (Index i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

template <typename T>
void mul(const T* a, const T* b, T* out, Index n) {
  for (Index i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

template <typename T>
void axpy(T alpha, const T* x, T* y, Index n) {
  for (Index i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
void scale(T alpha, const T* x, T* out, Index n) {
  for (Index i = 0; i < n; ++i) out[i] = alpha * x[i];
}

template <typename T>
T dot(const T* a, const T* b, Index n) {
  T acc = T(0);
  for (Index i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

#define RADAR_INSTANTIATE(T)                                                                   \
  template void gemm<T>(bool, bool, Index, Index, Index, const T*, Index, const T*, Index, T*, \
                        Index, bool, std::uint64_t*);                                          \
  template void add<T>(const T*, const T*, T*, Index);                                         \
  template void mul<T>(const T*, const T*, T*, Index);                                         \
  template void axpy<T>(T, const T*, T*, Index);                                               \
  template void scale<T>(T, const T*, T*, Index);                                              \
  template T dot<T>(const T*, const T*, Index);

RADAR_INSTANTIATE(float)
RADAR_INSTANTIATE(double)
#undef RADAR_INSTANTIATE

}  // namespace radar::kernels::scalar
