#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "avsc/config.hpp"

namespace avsc::harness {

struct Metrics {
  double accuracy = 0.0;  // fraction in [0, 1]
  double logloss = 0.0;   // mean -ln p(true scene), p clamped at 1e-12
};

/// Index of the largest probability; ties resolve to the lower index.
std::size_t argmax(std::span<const double> probs);

/// Macro accuracy is the mean per-class recall over classes present in
/// `labels`; micro accuracy is the plain fraction correct.
Metrics compute_metrics(const std::vector<std::vector<double>>& probs,
                        std::span<const std::size_t> labels, std::size_t num_classes,
                        Averaging averaging);

}  // namespace avsc::harness
