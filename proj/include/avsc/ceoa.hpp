#pragma once

// Contrastive event-object alignment. Per sample, the K most probable event
// and object classes give positive weight rows P_e, P_o; negatives N_e, N_o
// are either the K least probable classes (lowest-K mode) or K classes drawn
// uniformly from outside the positive set (random-K mode). Two pairwise
// contrastive losses pull positive event/object rows together.

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "avsc/branches.hpp"
#include "avsc/tensor.hpp"

namespace avsc::ceoa {

enum class NegativeMode { kLowestK, kRandomK };

std::string to_string(NegativeMode mode);
NegativeMode parse_mode(const std::string& text);  // "LKM" | "RKM"

struct ContrastiveConfig {
  std::size_t k = 3;
  NegativeMode mode = NegativeMode::kLowestK;
  std::uint64_t rng_seed = 0;
  // L2-normalise rows before the dot products. Off by default.
  bool normalize_rows = false;

  /// 1 <= K <= min(C_e, C_o) / 2.
  void validate(std::size_t num_events, std::size_t num_objects) const;
};

struct Selection {
  std::vector<std::size_t> positive;
  std::vector<std::size_t> negative;
};

/// Positive = K largest probabilities, ties to the lower index. Negative =
/// K smallest (LKM, same tie rule) or K uniform draws without replacement
/// from the complement of the positive set (RKM, ascending order).
Selection select_indices(std::span<const double> probs, std::size_t k, NegativeMode mode,
                         std::mt19937_64* rng);

struct ContrastiveBank {
  num::Tensor pos_events, neg_events;    // P_e, N_e  [K x D]
  num::Tensor pos_objects, neg_objects;  // P_o, N_o  [K x D]
  Selection events, objects;
  std::size_t k = 0;
  NegativeMode mode = NegativeMode::kLowestK;
};

/// Selects rows of the two classifier heads. Rows are differentiable views:
/// contrastive gradients reach exactly the selected rows. `rng` is required
/// for random-K mode.
ContrastiveBank select_bank(std::span<const double> event_probs,
                            std::span<const double> object_probs,
                            const branches::ClassifierHead& event_head,
                            const branches::ClassifierHead& object_head,
                            const ContrastiveConfig& cfg, std::mt19937_64* rng = nullptr);

/// -ln(mean(sigmoid(P_e P_o^T - P_e N_o^T)))
num::Tensor contrastive_loss_e2o(const ContrastiveBank& bank);
/// -ln(mean(sigmoid(P_o P_e^T - P_o N_e^T)))
num::Tensor contrastive_loss_o2e(const ContrastiveBank& bank);

/// Shared form: -ln(mean(sigmoid(anchor pos^T - anchor neg^T))).
num::Tensor pairwise_contrastive(const num::Tensor& anchor, const num::Tensor& positive,
                                 const num::Tensor& negative);

}  // namespace avsc::ceoa
