#include "avsc/kernels.hpp"

#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
#define AVSC_HAVE_AVX2_VARIANT 1
#include <immintrin.h>
#endif

namespace avsc::kernels {

#ifdef AVSC_HAVE_AVX2_VARIANT

// Compiled with per-function target attributes so the rest of the library
// keeps the baseline ISA. Nothing here may call non-inlined std code.
#define AVSC_AVX2 __attribute__((target("avx2,fma")))

namespace {

AVSC_AVX2 inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

AVSC_AVX2 void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d yy = _mm256_loadu_pd(y + i);
    yy = _mm256_fmadd_pd(a, _mm256_loadu_pd(x + i), yy);
    _mm256_storeu_pd(y + i, yy);
  }
  for (; i < n; ++i) y[i] = __builtin_fma(alpha, x[i], y[i]);
}

AVSC_AVX2 double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s = __builtin_fma(x[i], y[i], s);
  return s;
}

AVSC_AVX2 void add(const double* x, const double* y, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) out[i] = x[i] + y[i];
}

AVSC_AVX2 void mul(const double* x, const double* y, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

AVSC_AVX2 void mul_acc(const double* x, const double* y, double* acc, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d a = _mm256_loadu_pd(acc + i);
    a = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a);
    _mm256_storeu_pd(acc + i, a);
  }
  for (; i < n; ++i) acc[i] = __builtin_fma(x[i], y[i], acc[i]);
}

AVSC_AVX2 void gemm_nn(const double* a, const double* b, double* c, std::size_t m,
                       std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
    for (std::size_t p = 0; p < k; ++p) axpy(a[i * k + p], b + p * n, crow, n);
  }
}

AVSC_AVX2 void gemm_nt(const double* a, const double* b, double* c, std::size_t m,
                       std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] = dot(a + i * k, b + j * k, k);
}

AVSC_AVX2 void gemm_tn(const double* a, const double* b, double* c, std::size_t m,
                       std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < k * n; ++i) c[i] = 0.0;
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t p = 0; p < k; ++p) axpy(a[r * k + p], b + r * n, c + p * n, n);
}

constexpr KernelTable kTable{
    Isa::kAvx2, "avx2", axpy, dot, add, mul, mul_acc, gemm_nn, gemm_nt, gemm_tn,
};

}  // namespace

const KernelTable* avx2_table() {
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return &kTable;
  return nullptr;
}

#else

const KernelTable* avx2_table() { return nullptr; }

#endif

}  // namespace avsc::kernels
