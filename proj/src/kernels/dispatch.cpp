#include <atomic>
#include <cstdlib>
#include <string_view>

#include "avsc/kernels.hpp"

namespace avsc::kernels {
namespace {

const KernelTable* best_available() {
  if (const char* env = std::getenv("AVSC_ISA")) {
    const std::string_view want(env);
    if (want == "scalar") return &scalar_table();
    if (want == "avx2" && avx2_table()) return avx2_table();
    if (want == "neon" && neon_table()) return neon_table();
  }
  if (const auto* t = avx2_table()) return t;
  if (const auto* t = neon_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> table{best_available()};
  return table;
}

}  // namespace

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

bool select(Isa isa) {
  const KernelTable* t = nullptr;
  switch (isa) {
    case Isa::kScalar: t = &scalar_table(); break;
    case Isa::kAvx2: t = avx2_table(); break;
    case Isa::kNeon: t = neon_table(); break;
  }
  if (!t) return false;
  slot().store(t, std::memory_order_release);
  return true;
}

}  // namespace avsc::kernels
