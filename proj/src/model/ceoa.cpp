#include "avsc/ceoa.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "avsc/errors.hpp"
#include "avsc/ops.hpp"

namespace avsc::ceoa {

using num::Tensor;

std::string to_string(NegativeMode mode) { return mode == NegativeMode::kLowestK ? "LKM" : "RKM"; }

NegativeMode parse_mode(const std::string& text) {
  if (text == "LKM" || text == "lkm") return NegativeMode::kLowestK;
  if (text == "RKM" || text == "rkm") return NegativeMode::kRandomK;
  throw ConfigError("unknown negative mode '" + text + "' (expected LKM or RKM)");
}

void ContrastiveConfig::validate(std::size_t num_events, std::size_t num_objects) const {
  const std::size_t limit = std::min(num_events, num_objects) / 2;
  if (k < 1 || k > limit)
    throw ConfigError("contrastive K=" + std::to_string(k) + " must lie in [1, " +
                      std::to_string(limit) + "] for C_e=" + std::to_string(num_events) +
                      ", C_o=" + std::to_string(num_objects));
}

Selection select_indices(std::span<const double> probs, std::size_t k, NegativeMode mode,
                         std::mt19937_64* rng) {
  const std::size_t n = probs.size();
  if (k < 1 || 2 * k > n)
    throw ConfigError("select_indices: K=" + std::to_string(k) + " invalid for " +
                      std::to_string(n) + " classes");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Descending probability, lower index first on ties.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });

  Selection sel;
  sel.positive.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  if (mode == NegativeMode::kLowestK) {
    std::vector<std::size_t> asc(n);
    std::iota(asc.begin(), asc.end(), 0);
    std::stable_sort(asc.begin(), asc.end(),
                     [&](std::size_t a, std::size_t b) { return probs[a] < probs[b]; });
    // Skip anything already positive (only possible when probabilities tie
    // across the split).
    for (std::size_t idx : asc) {
      if (sel.negative.size() == k) break;
      if (std::find(sel.positive.begin(), sel.positive.end(), idx) == sel.positive.end())
        sel.negative.push_back(idx);
    }
  } else {
    if (!rng) throw ContractError("select_indices: random-K mode needs a random stream");
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < n; ++i)
      if (std::find(sel.positive.begin(), sel.positive.end(), i) == sel.positive.end())
        pool.push_back(i);
    // Partial Fisher-Yates over the candidate pool.
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(*rng)]);
    }
    sel.negative.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(sel.negative.begin(), sel.negative.end());
  }
  return sel;
}

namespace {

Tensor rows_of(const branches::ClassifierHead& head, const std::vector<std::size_t>& idx,
               bool normalize) {
  Tensor rows = num::row_select(head.weight, idx);
  return normalize ? num::l2_normalize_rows(rows) : rows;
}

}  // namespace

ContrastiveBank select_bank(std::span<const double> event_probs,
                            std::span<const double> object_probs,
                            const branches::ClassifierHead& event_head,
                            const branches::ClassifierHead& object_head,
                            const ContrastiveConfig& cfg, std::mt19937_64* rng) {
  if (event_probs.size() != event_head.classes() || object_probs.size() != object_head.classes())
    throw ShapeError("select_bank: probability vectors do not match head class counts");
  if (event_head.dim() != object_head.dim())
    throw ShapeError("select_bank: event and object heads have different widths " +
                     std::to_string(event_head.dim()) + " vs " + std::to_string(object_head.dim()));
  cfg.validate(event_head.classes(), object_head.classes());

  ContrastiveBank bank;
  bank.k = cfg.k;
  bank.mode = cfg.mode;
  bank.events = select_indices(event_probs, cfg.k, cfg.mode, rng);
  bank.objects = select_indices(object_probs, cfg.k, cfg.mode, rng);
  bank.pos_events = rows_of(event_head, bank.events.positive, cfg.normalize_rows);
  bank.neg_events = rows_of(event_head, bank.events.negative, cfg.normalize_rows);
  bank.pos_objects = rows_of(object_head, bank.objects.positive, cfg.normalize_rows);
  bank.neg_objects = rows_of(object_head, bank.objects.negative, cfg.normalize_rows);
  return bank;
}

Tensor pairwise_contrastive(const Tensor& anchor, const Tensor& positive, const Tensor& negative) {
  Tensor gap = num::sub(num::matmul(anchor, num::transpose(positive)),
                        num::matmul(anchor, num::transpose(negative)));
  // Floor keeps ln finite when every gap is hugely negative.
  Tensor m = num::clamp(num::mean(num::sigmoid(gap)), 1e-300, 1.0);
  return num::scale(num::log(m), -1.0);
}

Tensor contrastive_loss_e2o(const ContrastiveBank& bank) {
  return pairwise_contrastive(bank.pos_events, bank.pos_objects, bank.neg_objects);
}

Tensor contrastive_loss_o2e(const ContrastiveBank& bank) {
  return pairwise_contrastive(bank.pos_objects, bank.pos_events, bank.neg_events);
}

}  // namespace avsc::ceoa
