// AVX2 variants of the row primitives. This translation unit is compiled with
// -mavx2 -mfma; everything else stays at the base architecture, and the
// dispatcher only hands these out after a runtime cpuid check.

#include "nlhom/pair_kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64) || defined(__i386__)
#define NLHOM_X86 1
#else
#define NLHOM_X86 0
#endif

#if NLHOM_X86 && defined(__AVX2__)

#include <immintrin.h>

namespace nlhom::kernels {

namespace {

RowSum row_sq_avx2(const double* uA, const double* uB, const double* mA,
                   const double* mB, std::size_t len, double g) {
  const __m256d G = _mm256_set1_pd(g);
  __m256d acc = _mm256_setzero_pd();
  __m256d cnt = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 4 <= len; j += 4) {
    __m256d a = _mm256_loadu_pd(uA + j);
    __m256d b = _mm256_loadu_pd(uB + j);
    __m256d wa = _mm256_loadu_pd(mA + j);
    __m256d wb = _mm256_loadu_pd(mB + j);
    __m256d w = _mm256_mul_pd(wa, wb);
    __m256d d = _mm256_add_pd(G, _mm256_sub_pd(b, a));
    acc = _mm256_fmadd_pd(_mm256_mul_pd(w, d), d, acc);
    cnt = _mm256_add_pd(cnt, w);
  }
  alignas(32) double s[4], c4[4];
  _mm256_store_pd(s, acc);
  _mm256_store_pd(c4, cnt);
  RowSum r;
  r.sum = ((s[0] + s[1]) + s[2]) + s[3];
  r.count = ((c4[0] + c4[1]) + c4[2]) + c4[3];
  for (; j < len; ++j) {
    double w = mA[j] * mB[j];
    double d = g + uB[j] - uA[j];
    r.sum += w * d * d;
    r.count += w;
  }
  return r;
}

void row_axpy_avx2(double* out, const double* vA, const double* vB,
                   const double* mA, const double* mB, std::size_t len,
                   double c, double g) {
  const __m256d G = _mm256_set1_pd(g);
  const __m256d C = _mm256_set1_pd(c);
  std::size_t j = 0;
  for (; j + 4 <= len; j += 4) {
    __m256d a = _mm256_loadu_pd(vA + j);
    __m256d b = _mm256_loadu_pd(vB + j);
    __m256d wa = _mm256_loadu_pd(mA + j);
    __m256d wb = _mm256_loadu_pd(mB + j);
    __m256d w = _mm256_mul_pd(_mm256_mul_pd(wa, wb), C);
    __m256d d = _mm256_add_pd(G, _mm256_sub_pd(b, a));
    __m256d o = _mm256_loadu_pd(out + j);
    _mm256_storeu_pd(out + j, _mm256_fmadd_pd(w, d, o));
  }
  for (; j < len; ++j)
    out[j] += c * mA[j] * mB[j] * (g + vB[j] - vA[j]);
}

const Backend kAvx2{"avx2", row_sq_avx2, row_axpy_avx2};

bool cpu_has_avx2() {
#if defined(__GNUC__) || defined(__clang__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

}  // namespace

const Backend* avx2_backend() {
  static const Backend* b = cpu_has_avx2() ? &kAvx2 : nullptr;
  return b;
}

}  // namespace nlhom::kernels

#else  // architecture without AVX2 support at compile time

namespace nlhom::kernels {
const Backend* avx2_backend() { return nullptr; }
}  // namespace nlhom::kernels

#endif
