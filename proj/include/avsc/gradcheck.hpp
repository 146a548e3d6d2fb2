#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "avsc/tensor.hpp"

namespace avsc::num {

struct ParamCheck {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;  // at worst_index
  double numeric = 0.0;
};

struct GradCheckReport {
  std::vector<ParamCheck> params;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

/// Compares analytic gradients of a scalar closure against central
/// differences, element by element. Relative error is
/// |a - n| / max(|a|, |n|, 1e-8). `f` must rebuild its graph on every call
/// and be deterministic. Leaf gradients of `params` are reset.
GradCheckReport grad_check(const std::function<Tensor()>& f, std::vector<Tensor> params,
                           double h = 1e-5, double tol = 1e-4,
                           std::vector<std::string> names = {});

/// Directional variant: for each parameter tensor, a seeded random direction v
/// (entries uniform in [-1, 1]) and the comparison of g . v against
/// (f(p + h v) - f(p - h v)) / 2h, with the same relative error. Sensitive to
/// any wrong tensor gradient while averaging out per-element rounding noise.
GradCheckReport directional_check(const std::function<Tensor()>& f, std::vector<Tensor> params,
                                  std::uint64_t seed, double h = 1e-5, double tol = 1e-4,
                                  std::vector<std::string> names = {});

}  // namespace avsc::num
