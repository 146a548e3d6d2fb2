#pragma once

// Deterministic synthetic audio-visual scenes. Each scene has Bernoulli-style
// rates for every event and object class; a sample's soft tag vector is the
// scene's rate row plus Gaussian noise, binarized into pseudo labels. Audio
// grids and images are superpositions of fixed per-class templates for the
// active classes, plus noise.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace avsc::data {

/// Pseudo-label thresholds for events and objects.
inline constexpr double kEventThreshold = 0.0365;
inline constexpr double kObjectThreshold = 0.9216;

struct SceneSpec {
  std::size_t num_scenes = 4;    // C_s
  std::size_t num_events = 12;   // C_e
  std::size_t num_objects = 16;  // C_o
  std::vector<double> event_rates;   // [C_s x C_e], row-major
  std::vector<double> object_rates;  // [C_s x C_o]
  double noise_sigma = 0.1;
  std::size_t grid_rows = 32;  // T
  std::size_t grid_cols = 16;  // F
  std::size_t num_images = 3;  // N
  std::size_t image_h = 16;
  std::size_t image_w = 16;
  std::size_t image_channels = 1;
  double event_threshold = kEventThreshold;
  double object_threshold = kObjectThreshold;
  std::uint64_t template_seed = 0;

  double event_rate(std::size_t scene, std::size_t c) const { return event_rates[scene * num_events + c]; }
  double object_rate(std::size_t scene, std::size_t c) const { return object_rates[scene * num_objects + c]; }
  std::size_t audio_size() const { return grid_rows * grid_cols; }
  std::size_t image_size() const { return image_h * image_w * image_channels; }

  /// Rates in [0,1], rows distinct per modality, thresholds in [0,1].
  void validate() const;
};

struct RecipeOptions {
  std::size_t num_scenes = 4;
  std::size_t num_events = 12;
  std::size_t num_objects = 16;
  double on_fraction = 0.35;
  double min_row_distance = 0.3;  // L-infinity, per modality
};

/// Seeded rate recipe: each scene gets a signature event and object class plus
/// random extra active classes. Active event rates lie in [0.4, 1], inactive
/// in [0, 0.02]; active object rates in [0.95, 1], inactive in [0, 0.6].
/// Re-draws until every pair of scene rows is at least min_row_distance apart.
SceneSpec make_scene_spec(const RecipeOptions& recipe, std::uint64_t seed);

struct Sample {
  std::size_t scene = 0;
  std::vector<double> scene_label;  // one-hot [C_s]
  std::vector<double> event_soft, object_soft;
  std::vector<double> event_label, object_label;
  std::vector<double> audio;   // [T x F]
  std::vector<double> images;  // [N x H x W x ch]
};

struct Dataset {
  SceneSpec spec;
  std::uint64_t seed = 0;
  std::vector<Sample> samples;
  std::vector<std::size_t> train;  // indices into samples
  std::vector<std::size_t> test;
};

/// label_i = 1 iff soft_i >= threshold. Throws ConfigError for a threshold
/// outside [0, 1].
std::vector<double> binarize_pseudolabels(std::span<const double> soft, double threshold);

struct Templates {
  std::vector<std::vector<double>> events;   // each [T x F]
  std::vector<std::vector<double>> objects;  // each [H x W x ch]
};

/// Per-class templates, fixed by spec.template_seed.
Templates make_templates(const SceneSpec& spec);

struct RenderedFeatures {
  std::vector<double> audio;
  std::vector<double> images;
};

/// Sum of templates of active classes plus N(0, noise_sigma) per cell.
RenderedFeatures render_features(std::span<const double> event_label,
                                 std::span<const double> object_label, const SceneSpec& spec,
                                 const Templates& templates, std::uint64_t seed);

/// Balanced scene assignment, per-sample noise derived from (seed, index),
/// stratified 70/30 train/test split. Throws ConfigError when n < C_s.
Dataset generate_dataset(const SceneSpec& spec, std::size_t n, std::uint64_t seed);

/// Single-file export: a one-line JSON manifest followed by little-endian f64
/// arrays. load(save(d)) is bit-exact.
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace avsc::data
