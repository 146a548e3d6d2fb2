#include "avsc/kernels.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>
#endif

namespace avsc::kernels {

#if defined(__aarch64__)

// NEON is mandatory on aarch64, so no runtime probe is needed.
namespace {

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t a = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), a, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] = __builtin_fma(alpha, x[i], y[i]);
}

double dot(const double* x, const double* y, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s = __builtin_fma(x[i], y[i], s);
  return s;
}

void add(const double* x, const double* y, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vaddq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
  for (; i < n; ++i) out[i] = x[i] + y[i];
}

void mul(const double* x, const double* y, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

void mul_acc(const double* x, const double* y, double* acc, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(acc + i, vfmaq_f64(vld1q_f64(acc + i), vld1q_f64(x + i), vld1q_f64(y + i)));
  for (; i < n; ++i) acc[i] = __builtin_fma(x[i], y[i], acc[i]);
}

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
    for (std::size_t p = 0; p < k; ++p) axpy(a[i * k + p], b + p * n, crow, n);
  }
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] = dot(a + i * k, b + j * k, k);
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < k * n; ++i) c[i] = 0.0;
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t p = 0; p < k; ++p) axpy(a[r * k + p], b + r * n, c + p * n, n);
}

constexpr KernelTable kTable{
    Isa::kNeon, "neon", axpy, dot, add, mul, mul_acc, gemm_nn, gemm_nt, gemm_tn,
};

}  // namespace

const KernelTable* neon_table() { return &kTable; }

#else

const KernelTable* neon_table() { return nullptr; }

#endif

}  // namespace avsc::kernels
