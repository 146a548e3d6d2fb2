#pragma once

// Full audio-visual scene model: both branches, the contrastive bank, the
// fusion stage and all five losses for one sample.

#include <optional>
#include <random>
#include <vector>

#include "avsc/branches.hpp"
#include "avsc/ceoa.hpp"
#include "avsc/config.hpp"
#include "avsc/fusion.hpp"
#include "avsc/params.hpp"
#include "avsc/synthdata.hpp"

namespace avsc::harness {

struct SampleOutputs {
  branches::BranchOutput events, objects;  // undefined for the unused branch
  fusion::ScenePrediction scene;
  std::array<num::Tensor, 5> components;   // L_e, L_o, L_e2o, L_o2e, L_s
  fusion::LossBundle losses;               // only filled when requested
};

class SceneModel {
 public:
  /// Initialises every parameter from cfg.seed. Creation order is fixed, so
  /// configurations that differ only in module switches share initial weights.
  explicit SceneModel(const RunConfig& cfg);

  const RunConfig& config() const { return cfg_; }
  model::ParamSet& params() { return params_; }
  const model::ParamSet& params() const { return params_; }

  /// Forward pass for one sample. With `with_losses`, the five components and
  /// the weighted total are built; `rkm` is used only in random-K mode.
  SampleOutputs forward(const data::Sample& sample, bool with_losses,
                        std::mt19937_64* rkm = nullptr) const;

  /// Scene probabilities without building a loss.
  std::vector<double> predict(const data::Sample& sample) const;

  const branches::AudioBranch* audio() const { return audio_ ? &*audio_ : nullptr; }
  const branches::VisualBranch* visual() const { return visual_ ? &*visual_ : nullptr; }

 private:
  fusion::ScenePrediction scene_from(const branches::BranchOutput* events,
                                     const branches::BranchOutput* objects) const;

  RunConfig cfg_;
  model::ParamSet params_;
  std::optional<branches::AudioBranch> audio_;
  std::optional<branches::VisualBranch> visual_;
  fusion::MhaParams mha_eo_, mha_oe_;
  fusion::FusionHead fusion_head_;
  num::Tensor single_w_, single_b_;  // per-modality linear scene head
};

/// Generates the configured synthetic dataset.
data::Dataset build_dataset(const RunConfig& cfg);

/// Random-K stream for one sample visit; independent of batch order.
std::mt19937_64 rkm_stream(std::uint64_t seed, std::uint64_t epoch, std::uint64_t sample);

}  // namespace avsc::harness
