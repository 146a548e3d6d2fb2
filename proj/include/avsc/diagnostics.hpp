#pragma once

// Finite-difference gradient checks over every differentiable op and over the
// full five-term training loss of a small model.

#include <cstdint>
#include <string>
#include <vector>

#include "avsc/branches.hpp"
#include "avsc/config.hpp"
#include "avsc/gradcheck.hpp"

namespace avsc::harness {

struct NamedCheck {
  std::string name;
  num::GradCheckReport report;
};

/// One check per primitive op and per loss building block, inputs drawn from
/// `seed`. Inputs of kinked ops are kept away from the kinks.
std::vector<NamedCheck> check_ops(std::uint64_t seed, double h = 1e-5, double tol = 1e-4);

/// Small configuration used for the composite check: every module on, all
/// five loss terms weighted.
RunConfig tiny_config(std::uint64_t seed, branches::Activation act);

/// Initial weights are scaled by this factor before the composite check.
inline constexpr double kCompositeWeightScale = 1.5;

enum class CompositeMode {
  kDirectional,  // one random direction per parameter tensor
  kElementwise,  // every scalar; bounded by finite-difference rounding noise
};

/// d(total loss)/d(every parameter) of tiny_config on one generated sample.
num::GradCheckReport check_composite(std::uint64_t seed, branches::Activation act,
                                     CompositeMode mode = CompositeMode::kDirectional,
                                     double h = 1e-5, double tol = 1e-4);

}  // namespace avsc::harness
