#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>
#include <vector>

#include "avsc/kernels.hpp"
#include "avsc/ops.hpp"

using namespace avsc;
using kernels::KernelTable;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

std::vector<const KernelTable*> simd_tables() {
  std::vector<const KernelTable*> out;
  if (auto* t = kernels::avx2_table()) out.push_back(t);
  if (auto* t = kernels::neon_table()) out.push_back(t);
  return out;
}

bool close(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), 1.0});
}

// Restores the dispatch choice at scope exit.
struct IsaGuard {
  kernels::Isa saved = kernels::active().isa;
  ~IsaGuard() { kernels::select(saved); }
};

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("scalar table is always available and selectable") {
  IsaGuard guard;
  CHECK(kernels::scalar_table().isa == kernels::Isa::kScalar);
  CHECK(kernels::select(kernels::Isa::kScalar));
  CHECK(kernels::active().isa == kernels::Isa::kScalar);
}

TEST_CASE("unavailable ISA leaves the selection unchanged") {
  IsaGuard guard;
  kernels::select(kernels::Isa::kScalar);
#if defined(__x86_64__)
  CHECK_FALSE(kernels::select(kernels::Isa::kNeon));
#else
  CHECK_FALSE(kernels::select(kernels::Isa::kAvx2));
#endif
  CHECK(kernels::active().isa == kernels::Isa::kScalar);
}

TEST_CASE("SIMD vector kernels match scalar") {
  const auto& ref = kernels::scalar_table();
  std::mt19937_64 rng(11);
  for (const auto* simd : simd_tables()) {
    CAPTURE(simd->name);
    // Lengths cover empty input, pure tails, and multiple full lanes.
    for (std::size_t n : {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 64, 100, 1001}) {
      CAPTURE(n);
      const auto x = random_vec(n, rng), y = random_vec(n, rng);
      std::vector<double> a(n), b(n);

      ref.add(x.data(), y.data(), a.data(), n);
      simd->add(x.data(), y.data(), b.data(), n);
      CHECK(a == b);  // a single rounding per element: bit-exact

      ref.mul(x.data(), y.data(), a.data(), n);
      simd->mul(x.data(), y.data(), b.data(), n);
      CHECK(a == b);

      a = y;
      b = y;
      ref.axpy(0.37, x.data(), a.data(), n);
      simd->axpy(0.37, x.data(), b.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(close(a[i], b[i], 1e-15));

      a = y;
      b = y;
      ref.mul_acc(x.data(), y.data(), a.data(), n);
      simd->mul_acc(x.data(), y.data(), b.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(close(a[i], b[i], 1e-15));

      CHECK(close(ref.dot(x.data(), y.data(), n), simd->dot(x.data(), y.data(), n), 1e-12));
    }
  }
}

TEST_CASE("SIMD GEMMs match scalar") {
  const auto& ref = kernels::scalar_table();
  std::mt19937_64 rng(12);
  for (const auto* simd : simd_tables()) {
    CAPTURE(simd->name);
    for (auto [m, k, n] : std::vector<std::array<std::size_t, 3>>{
             {1, 1, 1}, {2, 3, 5}, {4, 4, 4}, {7, 9, 3}, {16, 16, 16}, {5, 33, 17}, {1, 64, 1}}) {
      CAPTURE(m);
      CAPTURE(k);
      CAPTURE(n);
      const auto a = random_vec(m * k, rng);
      const auto b = random_vec(k * n, rng);
      const auto bt = random_vec(n * k, rng);
      const auto at = random_vec(m * k, rng);
      const auto bm = random_vec(m * n, rng);
      std::vector<double> c1(m * n), c2(m * n), d1(k * n), d2(k * n);
      ref.gemm_nn(a.data(), b.data(), c1.data(), m, k, n);
      simd->gemm_nn(a.data(), b.data(), c2.data(), m, k, n);
      for (std::size_t i = 0; i < c1.size(); ++i) CHECK(close(c1[i], c2[i], 1e-12));
      ref.gemm_nt(a.data(), bt.data(), c1.data(), m, k, n);
      simd->gemm_nt(a.data(), bt.data(), c2.data(), m, k, n);
      for (std::size_t i = 0; i < c1.size(); ++i) CHECK(close(c1[i], c2[i], 1e-12));
      ref.gemm_tn(at.data(), bm.data(), d1.data(), m, k, n);
      simd->gemm_tn(at.data(), bm.data(), d2.data(), m, k, n);
      for (std::size_t i = 0; i < d1.size(); ++i) CHECK(close(d1[i], d2[i], 1e-12));
    }
  }
}

TEST_CASE("scalar GEMMs match a naive triple loop") {
  const auto& ref = kernels::scalar_table();
  std::mt19937_64 rng(13);
  const std::size_t m = 6, k = 5, n = 4;
  const auto a = random_vec(m * k, rng), b = random_vec(k * n, rng);
  std::vector<double> c(m * n);
  ref.gemm_nn(a.data(), b.data(), c.data(), m, k, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      CHECK(close(c[i * n + j], s, 1e-14));
    }
}

TEST_CASE("ops give the same results under every available ISA") {
  IsaGuard guard;
  std::mt19937_64 rng(14);
  num::Tensor a({9, 13}, random_vec(9 * 13, rng), true);
  num::Tensor b({13, 6}, random_vec(13 * 6, rng), true);
  auto run = [&] {
    a.zero_grad();
    b.zero_grad();
    const num::Tensor y = num::matmul(a, b);
    num::backward(num::sum(num::mul(y, y)));
    std::vector<double> out = y.to_vector();
    out.insert(out.end(), a.grad().begin(), a.grad().end());
    out.insert(out.end(), b.grad().begin(), b.grad().end());
    return out;
  };
  kernels::select(kernels::Isa::kScalar);
  const auto ref = run();
  for (const auto* simd : simd_tables()) {
    REQUIRE(kernels::select(simd->isa));
    const auto got = run();
    REQUIRE(got.size() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(close(ref[i], got[i], 1e-12));
  }
}

}  // TEST_SUITE
