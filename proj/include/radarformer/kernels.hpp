#pragma once
// Dense arithmetic kernels behind the tensor ops.
//
// Every kernel has a scalar reference implementation. Vectorized variants
// (currently AVX2+FMA on x86-64) are compiled into separate translation units
// and selected once at startup from the CPU feature flags. The active variant
// can be overridden with set_isa() or the RADAR_ISA environment variable
// ("scalar" or "avx2").

#include <cstdint>
#include <string_view>

namespace radar::kernels {

using Index = std::int64_t;

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

// Best variant supported by this binary on this CPU.
Isa detected_isa();
Isa active_isa();
// Throws std::invalid_argument when the variant is not available.
void set_isa(Isa isa);

/// Row-major C[m,n] (+)= op(A)[m,k] * op(B)[k,n].
///
/// op(A) is A or A^T depending on trans_a; A is addressed with leading
/// dimension lda in its stored orientation (same for B). When accumulate is
/// false C is overwritten.
template <typename T>
void gemm(bool trans_a, bool trans_b, Index m, Index n, Index k, const T* a, Index lda,
          const T* b, Index ldb, T* c, Index ldc, bool accumulate);

template <typename T>
void add(const T* a, const T* b, T* out, Index n);
template <typename T>
void mul(const T* a, const T* b, T* out, Index n);
// y += alpha * x
template <typename T>
void axpy(T alpha, const T* x, T* y, Index n);
template <typename T>
void scale(T alpha, const T* x, T* out, Index n);
template <typename T>
T dot(const T* a, const T* b, Index n);

// Counts multiply-accumulates performed by gemm while alive on this thread.
// Counting forces the scalar reference path so every MAC is a literal
// increment inside the loop.
class ScopedMacCounter {
 public:
  ScopedMacCounter();
  ~ScopedMacCounter();
  ScopedMacCounter(const ScopedMacCounter&) = delete;
  ScopedMacCounter& operator=(const ScopedMacCounter&) = delete;

  std::uint64_t count() const { return count_; }
  void reset() { count_ = 0; }

 private:
  friend std::uint64_t* active_mac_counter();
  std::uint64_t count_ = 0;
  ScopedMacCounter* previous_ = nullptr;
};

std::uint64_t* active_mac_counter();

namespace scalar {
template <typename T>
void gemm(bool trans_a, bool trans_b, Index m, Index n, Index k, const T* a, Index lda,
          const T* b, Index ldb, T* c, Index ldc, bool accumulate, std::uint64_t* mac_counter);
template <typename T>
void add(const T* a, const T* b, T* out, Index n);
template <typename T>
void mul(const T* a, const T* b, T* out, Index n);
template <typename T>
void axpy(T alpha, const T* x, T* y, Index n);
template <typename T>
void scale(T alpha, const T* x, T* out, Index n);
template <typename T>
T dot(const T* a, const T* b, Index n);
}  // namespace scalar

namespace avx2 {
bool available();
void gemm(bool trans_a, bool trans_b, Index m, Index n, Index k, const float* a, Index lda,
          const float* b, Index ldb, float* c, Index ldc, bool accumulate);
void gemm(bool trans_a, bool trans_b, Index m, Index n, Index k, const double* a, Index lda,
          const double* b, Index ldb, double* c, Index ldc, bool accumulate);
void add(const float* a, const float* b, float* out, Index n);
void add(const double* a, const double* b, double* out, Index n);
void mul(const float* a, const float* b, float* out, Index n);
void mul(const double* a, const double* b, double* out, Index n);
void axpy(float alpha, const float* x, float* y, Index n);
void axpy(double alpha, const double* x, double* y, Index n);
void scale(float alpha, const float* x, float* out, Index n);
void scale(double alpha, const double* x, double* out, Index n);
float dot(const float* a, const float* b, Index n);
double dot(const double* a, const double* b, Index n);
}  // namespace avx2

}  // namespace radar::kernels
