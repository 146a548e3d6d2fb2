#pragma once

// Run configuration. The JSON form mirrors these structs key for key; keys
// absent from a file keep the preset's value and unknown keys are rejected.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "avsc/branches.hpp"
#include "avsc/ceoa.hpp"
#include "avsc/fusion.hpp"
#include "avsc/synthdata.hpp"

namespace avsc::harness {

enum class Modality { kBoth, kAudio, kVisual };
enum class Averaging { kMacro, kMicro };

std::string to_string(Modality m);
Modality parse_modality(const std::string& text);
std::string to_string(Averaging a);
Averaging parse_averaging(const std::string& text);

struct DataConfig {
  std::size_t num_scenes = 4;
  std::size_t num_events = 12;
  std::size_t num_objects = 16;
  std::size_t n = 400;
  std::uint64_t seed = 2024;
  double noise_sigma = 0.1;
  double on_fraction = 0.35;
  double min_row_distance = 0.3;
  std::size_t grid_rows = 32;
  std::size_t grid_cols = 16;
  std::size_t num_images = 3;
  std::size_t image_h = 16;
  std::size_t image_w = 16;
  std::size_t image_channels = 1;
  double event_threshold = data::kEventThreshold;
  double object_threshold = data::kObjectThreshold;
};

struct AudioArch {
  std::size_t patch_rows = 8;
  std::size_t patch_cols = 4;
  std::size_t n_layers = 2;
  std::size_t n_heads = 2;
  std::size_t d_model = 32;
  std::size_t ffn_mult = 2;
};

struct VisualArch {
  std::size_t stem_patch = 2;
  std::vector<std::size_t> stage_blocks{1, 1, 2, 1};
  std::vector<std::size_t> stage_channels{4, 8, 16, 32};
  std::size_t expand = 4;
  std::size_t kernel = 7;
};

struct ModelOptions {
  std::size_t embed_dim = 32;
  branches::Activation activation = branches::Activation::kRelu;
  Modality modality = Modality::kBoth;
};

struct ContrastiveOptions {
  bool enabled = true;
  std::size_t k = 3;
  ceoa::NegativeMode mode = ceoa::NegativeMode::kLowestK;
  std::uint64_t rng_seed = 17;
  bool normalize_rows = false;
};

struct FusionConfig {
  bool enabled = true;
  std::size_t heads = 2;
  std::size_t head_dim = 8;
  std::size_t hidden = 32;
  fusion::FusionInput input = fusion::FusionInput::kLogits;
};

struct OptimizerConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// Published training hyperparameters, kept as the "paper" preset.
inline constexpr double kPaperLearningRate = 5e-6;
inline constexpr std::size_t kPaperEpochs = 100;
inline constexpr std::size_t kPaperBatchSize = 16;

struct RunConfig {
  std::string preset = "desk";
  std::uint64_t seed = 1;
  std::size_t epochs = 60;
  std::size_t batch_size = 16;
  Averaging accuracy = Averaging::kMacro;
  std::string out_dir = "runs";
  DataConfig data;
  AudioArch audio;
  VisualArch visual;
  ModelOptions model;
  ContrastiveOptions contrastive;
  FusionConfig fusion;
  std::array<double, 5> lambda{1.0, 1.0, 1.0, 1.0, 1.0};
  OptimizerConfig optimizer;

  /// Checks every module invariant; throws ConfigError / ShapeError.
  void validate() const;

  branches::AudioBranchConfig audio_config() const;
  branches::VisualBranchConfig visual_config() const;
  ceoa::ContrastiveConfig contrastive_config() const;
  data::SceneSpec scene_spec() const;
  /// Loss weights after module switches (CEOA off forces lambda3 = lambda4 = 0).
  fusion::LossWeights effective_weights() const;
};

/// "desk" or "paper".
RunConfig preset(const std::string& name);

nlohmann::json to_json(const RunConfig& cfg);
/// Overlays `j` onto `base`; unknown keys throw ConfigError.
RunConfig from_json(const nlohmann::json& j, RunConfig base = RunConfig{});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = RunConfig{});

}  // namespace avsc::harness
