#include <cstdlib>
#include <stdexcept>
#include <string>

#include "radarformer/kernels.hpp"

namespace radar::kernels {

#ifndef RADAR_HAVE_AVX2
namespace avx2 {
bool available() { return false; }
void gemm(bool, bool, Index, Index, Index, const float*, Index, const float*, Index, float*, Index,
          bool) {
  throw std::logic_error("avx2 kernels not compiled in");
}
void gemm(bool, bool, Index, Index, Index, const double*, Index, const double*, Index, double*,
          Index, bool) {
  throw std::logic_error("avx2 kernels not compiled in");
}
void add(const float*, const float*, float*, Index) {}
void add(const double*, const double*, double*, Index) {}
void mul(const float*, const float*, float*, Index) {}
void mul(const double*, const double*, double*, Index) {}
void axpy(float, const float*, float*, Index) {}
void axpy(double, const double*, double*, Index) {}
void scale(float, const float*, float*, Index) {}
void scale(double, const double*, double*, Index) {}
float dot(const float*, const float*, Index) { return 0.0f; }
double dot(const double*, const double*, Index) { return 0.0; }
}  // namespace avx2
#endif

namespace {

Isa initial_isa() {
  const Isa best = detected_isa();
  if (const char* env = std::getenv("RADAR_ISA")) {
    const std::string value(env);
    if (value == "scalar") return Isa::scalar;
    if (value == "avx2" && best == Isa::avx2) return Isa::avx2;
  }
  return best;
}

Isa& current() {
  static Isa isa = initial_isa();
  return isa;
}

thread_local ScopedMacCounter* tl_counter = nullptr;

bool use_avx2() { return current() == Isa::avx2 && tl_counter == nullptr; }

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

Isa detected_isa() {
  static const Isa isa = avx2::available() ? Isa::avx2 : Isa::scalar;
  return isa;
}

Isa active_isa() { return current(); }

void set_isa(Isa isa) {
  if (isa == Isa::avx2 && detected_isa() != Isa::avx2) {
    throw std::invalid_argument("avx2 kernels are not available on this machine");
  }
  current() = isa;
}

ScopedMacCounter::ScopedMacCounter() : previous_(tl_counter) { tl_counter = this; }
ScopedMacCounter::~ScopedMacCounter() { tl_counter = previous_; }

std::uint64_t* active_mac_counter() { return tl_counter ? &tl_counter->count_ : nullptr; }

template <typename T>
void gemm(bool trans_a, bool trans_b, Index m, Index n, Index k, const T* a, Index lda,
          const T* b, Index ldb, T* c, Index ldc, bool accumulate) {
  if (use_avx2()) {
    avx2::gemm(trans_a, trans_b, m, n, k, a, lda, b, ldb, c, ldc, accumulate);
  } else {
    scalar::gemm(trans_a, trans_b, m, n, k, a, lda, b, ldb, c, ldc, accumulate,
                 active_mac_counter());
  }
}

template <typename T>
void add(const T* a, const T* b, T* out, Index n) {
  use_avx2() ? avx2::add(a, b, out, n) : scalar::add(a, b, out, n);
}
template <typename T>
void mul(const T* a, const T* b, T* out, Index n) {
  use_avx2() ? avx2::mul(a, b, out, n) : scalar::mul(a, b, out, n);
}
template <typename T>
void axpy(T alpha, const T* x, T* y, Index n) {
  use_avx2() ? avx2::axpy(alpha, x, y, n) : scalar::axpy(alpha, x, y, n);
}
template <typename T>
void scale(T alpha, const T* x, T* out, Index n) {
  use_avx2() ? avx2::scale(alpha, x, out, n) : scalar::scale(alpha, x, out, n);
}
template <typename T>
T dot(const T* a, const T* b, Index n) {
  return use_avx2() ? avx2::dot(a, b, n) : scalar::dot(a, b, n);
}

#define RADAR_INSTANTIATE(T)                                                                   \
  template void gemm<T>(bool, bool, Index, Index, Index, const T*, Index, const T*, Index, T*, \
                        Index, bool);                                                          \
  template void add<T>(const T*, const T*, T*, Index);                                         \
  template void mul<T>(const T*, const T*, T*, Index);                                         \
  template void axpy<T>(T, const T*, T*, Index);                                               \
  template void scale<T>(T, const T*, T*, Index);                                              \
  template T dot<T>(const T*, const T*, Index);

RADAR_INSTANTIATE(float)
RADAR_INSTANTIATE(double)
#undef RADAR_INSTANTIATE

}  // namespace radar::kernels
