#pragma once

// Scaled-down audio (patch transformer) and visual (depthwise-conv stages)
// classification branches. Each ends in linear -> activation -> classifier
// head; the head's weight rows are the per-class vectors used for alignment.

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "avsc/params.hpp"
#include "avsc/tensor.hpp"

namespace avsc::branches {

enum class Activation { kRelu, kGelu };

num::Tensor activate(const num::Tensor& x, Activation act);

// Full-scale architecture values, kept for reference; desk defaults below.
inline constexpr std::size_t kFullScaleAudioLayers = 12;
inline constexpr std::size_t kFullScaleAudioHeads = 12;
inline constexpr std::size_t kFullScaleAudioDim = 768;
inline constexpr std::size_t kFullScaleVisualBlocks[] = {3, 3, 27, 3};
inline constexpr std::size_t kFullScaleVisualChannels[] = {128, 256, 512, 1024};
inline constexpr std::size_t kFullScaleEmbedDim = 1024;

struct AudioBranchConfig {
  std::size_t grid_rows = 32;  // T
  std::size_t grid_cols = 16;  // F
  std::size_t patch_rows = 8;
  std::size_t patch_cols = 4;
  std::size_t n_layers = 2;
  std::size_t n_heads = 2;
  std::size_t d_model = 32;
  std::size_t ffn_mult = 2;
  std::size_t num_events = 12;  // C_e
  std::size_t embed_dim = 32;   // width of the layer feeding the head

  void validate() const;
  std::size_t num_patches() const { return (grid_rows / patch_rows) * (grid_cols / patch_cols); }
};

struct VisualBranchConfig {
  std::size_t image_h = 16;
  std::size_t image_w = 16;
  std::size_t channels = 1;
  std::size_t stem_patch = 2;
  std::vector<std::size_t> stage_blocks{1, 1, 2, 1};
  std::vector<std::size_t> stage_channels{4, 8, 16, 32};
  std::size_t expand = 4;
  std::size_t kernel = 7;
  std::size_t num_objects = 16;  // C_o
  std::size_t embed_dim = 32;

  void validate() const;
};

/// logits = W * embedding^T + b, W is [C x D]. Row i of W represents class i.
struct ClassifierHead {
  num::Tensor weight;  // [C x D]
  num::Tensor bias;    // [C x 1]

  std::size_t classes() const { return weight.rows(); }
  std::size_t dim() const { return weight.cols(); }
  num::Tensor apply(const num::Tensor& embedding_row) const;
};

struct BranchOutput {
  num::Tensor logits;  // [C x 1]
  num::Tensor probs;   // sigmoid(logits)
  const ClassifierHead* head = nullptr;
};

class AudioBranch {
 public:
  static AudioBranch create(const AudioBranchConfig& cfg, model::ParamSet& params,
                            std::mt19937_64& rng, const std::string& prefix = "audio.");

  /// features: [T x F] grid.
  BranchOutput forward(const num::Tensor& features, Activation act = Activation::kRelu) const;

  const AudioBranchConfig& config() const { return cfg_; }
  const ClassifierHead& head() const { return head_; }

 private:
  struct Layer {
    std::vector<num::Tensor> wq, wk, wv;  // per head [d_model x d_head]
    num::Tensor wo, bo;                   // [d_model x d_model], [1 x d_model]
    num::Tensor w1, b1, w2, b2;           // feed-forward
  };

  AudioBranchConfig cfg_;
  num::Tensor patch_w_, patch_b_, pos_;
  std::vector<Layer> layers_;
  num::Tensor embed_w_, embed_b_;
  ClassifierHead head_;
};

class VisualBranch {
 public:
  static VisualBranch create(const VisualBranchConfig& cfg, model::ParamSet& params,
                             std::mt19937_64& rng, const std::string& prefix = "visual.");

  /// images: N >= 1 tensors, each [(H*W) x channels].
  BranchOutput forward(const std::vector<num::Tensor>& images,
                       Activation act = Activation::kRelu) const;

  const VisualBranchConfig& config() const { return cfg_; }
  const ClassifierHead& head() const { return head_; }

 private:
  struct Block {
    num::Tensor dw, dw_b;    // [(k*k) x c], [1 x c]
    num::Tensor pw1, pw1_b;  // [c x expand*c]
    num::Tensor pw2, pw2_b;  // [expand*c x c]
  };
  struct Stage {
    num::Tensor down_w, down_b;  // stem or 2x2 downsample
    std::vector<Block> blocks;
  };

  num::Tensor image_features(const num::Tensor& image, Activation act) const;

  VisualBranchConfig cfg_;
  std::vector<Stage> stages_;
  num::Tensor embed_w_, embed_b_;
  ClassifierHead head_;
};

/// -sum_i y_i ln p_i + (1 - y_i) ln(1 - p_i), summed over classes, with p
/// clamped to [1e-12, 1 - 1e-12]. probs and labels are [C x 1]; labels must
/// be 0/1.
num::Tensor bce_loss(const num::Tensor& probs, const num::Tensor& labels);

}  // namespace avsc::branches
