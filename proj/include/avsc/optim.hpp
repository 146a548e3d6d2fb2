#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "avsc/config.hpp"
#include "avsc/tensor.hpp"

namespace avsc::harness {

/// First and second moments per parameter tensor, plus the shared step count.
struct AdamWState {
  std::vector<std::vector<double>> m, v;
  std::uint64_t step = 0;
};

/// One decoupled-weight-decay Adam update on a flat buffer:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2
///   p <- p - lr (m_hat / (sqrt(v_hat) + eps) + wd p)
/// `step` is the 1-based step index used for bias correction.
void adamw_update(std::span<double> param, std::span<const double> grad, std::span<double> m,
                  std::span<double> v, std::uint64_t step, const OptimizerConfig& opt);

/// Applies adamw_update to every tensor using its accumulated gradient.
/// Parameter and gradient shapes must match; state is sized on first use.
void adamw_step(std::span<num::Tensor> params, AdamWState& state, const OptimizerConfig& opt);

/// Same, with explicitly supplied gradients (one per parameter).
void adamw_step(std::span<num::Tensor> params, std::span<const std::vector<double>> grads,
                AdamWState& state, const OptimizerConfig& opt);

}  // namespace avsc::harness
