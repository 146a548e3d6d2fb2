#pragma once

// Semantic-based fusion: cross-directional multi-head attention between the
// per-class event and object vectors, residual enrichment, concatenation and
// a two-layer scene classifier. Also hosts the scene loss and the weighted
// total loss.

#include <array>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "avsc/branches.hpp"
#include "avsc/params.hpp"
#include "avsc/tensor.hpp"

namespace avsc::fusion {

inline constexpr std::size_t kFullScaleHeads = 8;
inline constexpr std::size_t kFullScaleHeadDim = 64;

/// Attention over per-class scalar features; every projection maps 1 -> d.
struct MhaParams {
  std::size_t heads = 0;
  std::size_t head_dim = 0;
  std::vector<num::Tensor> wq, wk, wv;  // per head [1 x d]
  num::Tensor wo;                       // [(h*d) x 1]

  static MhaParams create(std::size_t heads, std::size_t head_dim, model::ParamSet& params,
                          std::mt19937_64& rng, const std::string& prefix);
};

/// Per head: softmax((q wq)(k wk)^T / sqrt(d)) (v wv); heads concatenated and
/// projected by wo. q [n_q x 1], k and v [n_k x 1] -> [n_q x 1]. When
/// `attention` is given, the per-head attention matrices are appended.
num::Tensor mha(const num::Tensor& q, const num::Tensor& k, const num::Tensor& v,
                const MhaParams& p, std::vector<num::Tensor>* attention = nullptr);

enum class FusionInput { kLogits, kProbs };

std::string to_string(FusionInput input);
FusionInput parse_fusion_input(const std::string& text);

/// hidden = act(x W1 + b1), logits = hidden W2 + b2; x is [1 x (C_e + C_o)].
struct FusionHead {
  num::Tensor w1, b1;  // [(C_e+C_o) x H], [1 x H]
  num::Tensor w2, b2;  // [H x C_s], [1 x C_s]

  static FusionHead create(std::size_t in, std::size_t hidden, std::size_t scenes,
                           model::ParamSet& params, std::mt19937_64& rng,
                           const std::string& prefix);
  std::size_t input_width() const { return w1.rows(); }
};

struct ScenePrediction {
  num::Tensor logits;  // [C_s x 1]
  num::Tensor probs;   // softmax(logits)
};

struct FusionOptions {
  bool attention_enabled = true;  // false: raw branch vectors straight into the head
  FusionInput input = FusionInput::kLogits;
  branches::Activation activation = branches::Activation::kRelu;
};

/// Optional views of the intermediate vectors for inspection.
struct FusionTrace {
  num::Tensor objects_by_events;  // MHA_o_by_e [C_o x 1]
  num::Tensor events_by_objects;  // MHA_e_by_o [C_e x 1]
  std::vector<num::Tensor> attention;
};

ScenePrediction sf_forward(const branches::BranchOutput& events,
                           const branches::BranchOutput& objects, const MhaParams& p_eo,
                           const MhaParams& p_oe, const FusionHead& head,
                           const FusionOptions& options = {}, FusionTrace* trace = nullptr);

/// Scene logits row [1 x C_s] -> prediction with softmax probabilities.
ScenePrediction scene_prediction(const num::Tensor& logits_row);

/// -sum_i y_i ln p_i with p clamped at 1e-12. `one_hot` must contain a single
/// 1 and zeros elsewhere.
num::Tensor ce_loss(const ScenePrediction& pred, std::span<const double> one_hot);

struct LossWeights {
  std::array<double, 5> lambda{1.0, 1.0, 1.0, 1.0, 1.0};
  void validate() const;
};

struct LossBundle {
  double events = 0.0;          // L_e
  double objects = 0.0;         // L_o
  double event_to_object = 0.0; // L_e2o
  double object_to_event = 0.0; // L_o2e
  double scene = 0.0;           // L_s
  num::Tensor total;            // L, differentiable

  std::array<double, 5> components() const {
    return {events, objects, event_to_object, object_to_event, scene};
  }
};

/// L = sum_i lambda_i L_i. Undefined components are treated as absent (their
/// weight must then be zero or they contribute nothing). Terms with
/// lambda_i == 0 are left out of the graph.
LossBundle total_loss(const std::array<num::Tensor, 5>& components, const LossWeights& w);

}  // namespace avsc::fusion
