// AVX2 + FMA kernels. This translation unit is compiled with -mavx2 -mfma and
// must only be entered after available() returned true.

#include <immintrin.h>

#include <algorithm>
#include <cstring>
#include <vector>

#include "radarformer/kernels.hpp"

namespace radar::kernels::avx2 {

bool available() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

namespace {

// Register tile: kRows rows of A by two vector widths of B.
template <typename T>
struct Vec;

template <>
struct Vec<float> {
  using type = __m256;
  static constexpr int width = 8;
  static type zero() { return _mm256_setzero_ps(); }
  static type load(const float* p) { return _mm256_loadu_ps(p); }
  static void store(float* p, type v) { _mm256_storeu_ps(p, v); }
  static type broadcast(const float* p) { return _mm256_broadcast_ss(p); }
  static type set1(float v) { return _mm256_set1_ps(v); }
  static type fmadd(type a, type b, type c) { return _mm256_fmadd_ps(a, b, c); }
  static type add(type a, type b) { return _mm256_add_ps(a, b); }
  static type mul(type a, type b) { return _mm256_mul_ps(a, b); }
  static float hsum(type v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 shuf = _mm_movehdup_ps(lo);
    __m128 sums = _mm_add_ps(lo, shuf);
    shuf = _mm_movehl_ps(shuf, sums);
    sums = _mm_add_ss(sums, shuf);
    return _mm_cvtss_f32(sums);
  }
};

template <>
struct Vec<double> {
  using type = __m256d;
  static constexpr int width = 4;
  static type zero() { return _mm256_setzero_pd(); }
  static type load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, type v) { _mm256_storeu_pd(p, v); }
  static type broadcast(const double* p) { return _mm256_broadcast_sd(p); }
  static type set1(double v) { return _mm256_set1_pd(v); }
  static type fmadd(type a, type b, type c) { return _mm256_fmadd_pd(a, b, c); }
  static type add(type a, type b) { return _mm256_add_pd(a, b); }
  static type mul(type a, type b) { return _mm256_mul_pd(a, b); }
  static double hsum(type v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d high64 = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, high64));
  }
};

constexpr Index kRows = 6;
constexpr Index kBlockK = 256;
constexpr Index kBlockM = 96;
constexpr Index kBlockN = 2048;

template <typename T>
struct Packing {
  std::vector<T> a;
  std::vector<T> b;
};

template <typename T>
Packing<T>& packing_buffers() {
  thread_local Packing<T> buffers;
  return buffers;
}

// Packs op(B)[pc:pc+kc, jc:jc+nc] into column strips of `cols` values per k.
template <typename T>
void pack_b(bool trans_b, const T* b, Index ldb, Index pc, Index jc, Index kc, Index nc,
            Index cols, T* out) {
  for (Index js = 0; js < nc; js += cols) {
    const Index w = std::min(cols, nc - js);
    for (Index p = 0; p < kc; ++p) {
      T* dst = out + (js / cols) * kc * cols + p * cols;
      if (!trans_b) {
        const T* src = b + (pc + p) * ldb + jc + js;
        std::memcpy(dst, src, sizeof(T) * static_cast<std::size_t>(w));
      } else {
        for (Index j = 0; j < w; ++j) dst[j] = b[(jc + js + j) * ldb + pc + p];
      }
      for (Index j = w; j < cols; ++j) dst[j] = T(0);
    }
  }
}

// Packs op(A)[ic:ic+mc, pc:pc+kc] into row strips of kRows values per k.
template <typename T>
void pack_a(bool trans_a, const T* a, Index lda, Index ic, Index pc, Index mc, Index kc, T* out) {
  for (Index is = 0; is < mc; is += kRows) {
    const Index h = std::min(kRows, mc - is);
    T* strip = out + (is / kRows) * kc * kRows;
    for (Index p = 0; p < kc; ++p) {
      T* dst = strip + p * kRows;
      for (Index i = 0; i < h; ++i) {
        const Index row = ic + is + i;
        const Index col = pc + p;
        dst[i] = trans_a ? a[col * lda + row] : a[row * lda + col];
      }
      for (Index i = h; i < kRows; ++i) dst[i] = T(0);
    }
  }
}

// C[rows, cols] += Ap * Bp over kc, rows <= kRows, cols <= 2 * width.
template <typename T>
void micro_kernel(Index kc, const T* ap, const T* bp, T* c, Index ldc, Index rows, Index cols) {
  using V = Vec<T>;
  constexpr Index w = V::width;
  typename V::type acc[kRows][2];
  for (Index i = 0; i < kRows; ++i) acc[i][0] = acc[i][1] = V::zero();
  for (Index p = 0; p < kc; ++p) {
    const auto b0 = V::load(bp + p * 2 * w);
    const auto b1 = V::load(bp + p * 2 * w + w);
    const T* arow = ap + p * kRows;
    for (Index i = 0; i < kRows; ++i) {
      const auto av = V::broadcast(arow + i);
      acc[i][0] = V::fmadd(av, b0, acc[i][0]);
      acc[i][1] = V::fmadd(av, b1, acc[i][1]);
    }
  }
  if (rows == kRows && cols == 2 * w) {
    for (Index i = 0; i < kRows; ++i) {
      T* crow = c + i * ldc;
      V::store(crow, V::add(V::load(crow), acc[i][0]));
      V::store(crow + w, V::add(V::load(crow + w), acc[i][1]));
    }
    return;
  }
  alignas(32) T tile[kRows][2 * w];
  for (Index i = 0; i < kRows; ++i) {
    V::store(tile[i], acc[i][0]);
    V::store(tile[i] + w, acc[i][1]);
  }
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) c[i * ldc + j] += tile[i][j];
  }
}

template <typename T>
void gemm_impl(bool trans_a, bool trans_b, Index m, Index n, Index k, const T* a, Index lda,
               const T* b, Index ldb, T* c, Index ldc, bool accumulate) {
  if (!accumulate) {
    for (Index i = 0; i < m; ++i) std::fill(c + i * ldc, c + i * ldc + n, T(0));
  }
  if (m == 0 || n == 0 || k == 0) return;
  constexpr Index cols = 2 * Vec<T>::width;
  auto& buffers = packing_buffers<T>();
  for (Index jc = 0; jc < n; jc += kBlockN) {
    const Index nc = std::min(kBlockN, n - jc);
    const Index nc_padded = (nc + cols - 1) / cols * cols;
    for (Index pc = 0; pc < k; pc += kBlockK) {
      const Index kc = std::min(kBlockK, k - pc);
      buffers.b.resize(static_cast<std::size_t>(nc_padded * kc));
      pack_b(trans_b, b, ldb, pc, jc, kc, nc, cols, buffers.b.data());
      for (Index ic = 0; ic < m; ic += kBlockM) {
        const Index mc = std::min(kBlockM, m - ic);
        const Index mc_padded = (mc + kRows - 1) / kRows * kRows;
        buffers.a.resize(static_cast<std::size_t>(mc_padded * kc));
        pack_a(trans_a, a, lda, ic, pc, mc, kc, buffers.a.data());
        for (Index js = 0; js < nc; js += cols) {
          const T* bp = buffers.b.data() + (js / cols) * kc * cols;
          const Index w = std::min(cols, nc - js);
          for (Index is = 0; is < mc; is += kRows) {
            const T* ap = buffers.a.data() + (is / kRows) * kc * kRows;
            const Index h = std::min(kRows, mc - is);
            micro_kernel(kc, ap, bp, c + (ic + is) * ldc + jc + js, ldc, h, w);
          }
        }
      }
    }
  }
}

template <typename T, typename VecOp, typename ScalarOp>
void binary(const T* a, const T* b, T* out, Index n, VecOp vop, ScalarOp sop) {
  using V = Vec<T>;
  Index i = 0;
  for (; i + V::width <= n; i += V::width) V::store(out + i, vop(V::load(a + i), V::load(b + i)));
  for (; i < n; ++i) out[i] = sop(a[i], b[i]);
}

template <typename T>
void axpy_impl(T alpha, const T* x, T* y, Index n) {
  using V = Vec<T>;
  const auto av = V::set1(alpha);
  Index i = 0;
  for (; i + V::width <= n; i += V::width) V::store(y + i, V::fmadd(av, V::load(x + i), V::load(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
void scale_impl(T alpha, const T* x, T* out, Index n) {
  using V = Vec<T>;
  const auto av = V::set1(alpha);
  Index i = 0;
  for (; i + V::width <= n; i += V::width) V::store(out + i, V::mul(av, V::load(x + i)));
  for (; i < n; ++i) out[i] = alpha * x[i];
}

template <typename T>
T dot_impl(const T* a, const T* b, Index n) {
  using V = Vec<T>;
  auto acc0 = V::zero();
  auto acc1 = V::zero();
  Index i = 0;
  for (; i + 2 * V::width <= n; i += 2 * V::width) {
    acc0 = V::fmadd(V::load(a + i), V::load(b + i), acc0);
    acc1 = V::fmadd(V::load(a + i + V::width), V::load(b + i + V::width), acc1);
  }
  T acc = V::hsum(V::add(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

void gemm(bool trans_a, bool trans_b, Index m, Index n, Index k, const float* a, Index lda,
          const float* b, Index ldb, float* c, Index ldc, bool accumulate) {
  gemm_impl(trans_a, trans_b, m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}
void gemm(bool trans_a, bool trans_b, Index m, Index n, Index k, const double* a, Index lda,
          const double* b, Index ldb, double* c, Index ldc, bool accumulate) {
  gemm_impl(trans_a, trans_b, m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

void add(const float* a, const float* b, float* out, Index n) {
  binary(a, b, out, n, Vec<float>::add, [](float x, float y) { return x + y; });
}
void add(const double* a, const double* b, double* out, Index n) {
  binary(a, b, out, n, Vec<double>::add, [](double x, double y) { return x + y; });
}
void mul(const float* a, const float* b, float* out, Index n) {
  binary(a, b, out, n, Vec<float>::mul, [](float x, float y) { return x * y; });
}
void mul(const double* a, const double* b, double* out, Index n) {
  binary(a, b, out, n, Vec<double>::mul, [](double x, double y) { return x * y; });
}
void axpy(float alpha, const float* x, float* y, Index n) { axpy_impl(alpha, x, y, n); }
void axpy(double alpha, const double* x, double* y, Index n) { axpy_impl(alpha, x, y, n); }
void scale(float alpha, const float* x, float* out, Index n) { scale_impl(alpha, x, out, n); }
void scale(double alpha, const double* x, double* out, Index n) { scale_impl(alpha, x, out, n); }
float dot(const float* a, const float* b, Index n) { return dot_impl(a, b, n); }
double dot(const double* a, const double* b, Index n) { return dot_impl(a, b, n); }

}  // namespace radar::kernels::avx2
