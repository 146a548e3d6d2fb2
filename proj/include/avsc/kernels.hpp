#pragma once

// Dense f64 inner loops used by the tensor ops. Every kernel has a scalar
// reference implementation; SIMD variants (AVX2+FMA on x86-64, NEON on
// aarch64) are selected once at startup when the CPU supports them.
//
// All variants use a fixed reduction order, so results are reproducible run
// to run on the same machine. Variants may differ from the scalar reference
// in the last bits (FMA contraction, lane-split dot products).

#include <cstddef>
#include <string_view>

namespace avsc::kernels {

enum class Isa { kScalar, kAvx2, kNeon };

struct KernelTable {
  Isa isa;
  std::string_view name;

  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // out[i] = x[i] + y[i]
  void (*add)(const double* x, const double* y, double* out, std::size_t n);
  // out[i] = x[i] * y[i]
  void (*mul)(const double* x, const double* y, double* out, std::size_t n);
  // acc[i] += x[i] * y[i]
  void (*mul_acc)(const double* x, const double* y, double* acc, std::size_t n);

  // Row-major GEMMs, output overwritten.
  // c[m x n] = a[m x k] * b[k x n]
  void (*gemm_nn)(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t k, std::size_t n);
  // c[m x n] = a[m x k] * b[n x k]^T
  void (*gemm_nt)(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t k, std::size_t n);
  // c[k x n] = a[m x k]^T * b[m x n]
  void (*gemm_tn)(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t k, std::size_t n);
};

const KernelTable& scalar_table();

/// nullptr when the variant was not compiled in or the CPU lacks support.
const KernelTable* avx2_table();
const KernelTable* neon_table();

/// Table used by the tensor ops. Chosen on first use: the best supported
/// variant, unless the AVSC_ISA environment variable names one
/// ("scalar", "avx2", "neon").
const KernelTable& active();

/// Overrides the active table (tests, benchmarks). Returns false and leaves
/// the selection unchanged when the ISA is unavailable.
bool select(Isa isa);

}  // namespace avsc::kernels
