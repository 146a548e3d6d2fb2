#include "avsc/fusion.hpp"

#include <cmath>

#include "avsc/errors.hpp"
#include "avsc/ops.hpp"

namespace avsc::fusion {

using num::Tensor;

MhaParams MhaParams::create(std::size_t heads, std::size_t head_dim, model::ParamSet& params,
                            std::mt19937_64& rng, const std::string& prefix) {
  if (heads == 0 || head_dim == 0) throw ConfigError("mha: heads and head_dim must be positive");
  MhaParams p;
  p.heads = heads;
  p.head_dim = head_dim;
  // Inputs are scalars per class, so fan-in of each projection is 1.
  for (std::size_t h = 0; h < heads; ++h) {
    const std::string hp = prefix + "head" + std::to_string(h) + ".";
    p.wq.push_back(params.add_uniform(hp + "wq", {1, head_dim}, 1.0, rng));
    p.wk.push_back(params.add_uniform(hp + "wk", {1, head_dim}, 1.0, rng));
    p.wv.push_back(params.add_uniform(hp + "wv", {1, head_dim}, 1.0, rng));
  }
  p.wo = params.add_uniform(prefix + "wo", {heads * head_dim, 1},
                            1.0 / std::sqrt(static_cast<double>(heads * head_dim)), rng);
  return p;
}

Tensor mha(const Tensor& q, const Tensor& k, const Tensor& v, const MhaParams& p,
           std::vector<Tensor>* attention) {
  if (q.ndim() != 2 || q.cols() != 1 || k.ndim() != 2 || k.cols() != 1 || v.ndim() != 2 ||
      v.cols() != 1)
    throw ShapeError("mha: q, k, v must be column vectors, got " + num::to_string(q.shape()) +
                     ", " + num::to_string(k.shape()) + ", " + num::to_string(v.shape()));
  if (k.rows() != v.rows())
    throw ShapeError("mha: key/value length mismatch " + num::to_string(k.shape()) + " vs " +
                     num::to_string(v.shape()));
  if (p.wq.size() != p.heads || p.wk.size() != p.heads || p.wv.size() != p.heads)
    throw ShapeError("mha: parameter head count mismatch");
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(p.head_dim));
  std::vector<Tensor> heads;
  heads.reserve(p.heads);
  for (std::size_t h = 0; h < p.heads; ++h) {
    Tensor qh = num::matmul(q, p.wq[h]);  // [n_q x d]
    Tensor kh = num::matmul(k, p.wk[h]);  // [n_k x d]
    Tensor vh = num::matmul(v, p.wv[h]);  // [n_k x d]
    Tensor attn = num::softmax_rows(num::scale(num::matmul(qh, num::transpose(kh)), inv_sqrt_d));
    if (attention) attention->push_back(attn);
    heads.push_back(num::matmul(attn, vh));
  }
  Tensor joined = heads.size() == 1 ? heads[0] : num::concat(heads, 1);
  return num::matmul(joined, p.wo);
}

std::string to_string(FusionInput input) { return input == FusionInput::kLogits ? "logits" : "probs"; }

FusionInput parse_fusion_input(const std::string& text) {
  if (text == "logits") return FusionInput::kLogits;
  if (text == "probs") return FusionInput::kProbs;
  throw ConfigError("unknown fusion_input '" + text + "' (expected logits or probs)");
}

FusionHead FusionHead::create(std::size_t in, std::size_t hidden, std::size_t scenes,
                              model::ParamSet& params, std::mt19937_64& rng,
                              const std::string& prefix) {
  if (in == 0 || hidden == 0 || scenes < 2) throw ConfigError("fusion head: invalid sizes");
  FusionHead h;
  const double b1 = 1.0 / std::sqrt(static_cast<double>(in));
  const double b2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  h.w1 = params.add_uniform(prefix + "hidden.w", {in, hidden}, b1, rng);
  h.b1 = params.add_uniform(prefix + "hidden.b", {1, hidden}, b1, rng);
  h.w2 = params.add_uniform(prefix + "out.w", {hidden, scenes}, b2, rng);
  h.b2 = params.add_uniform(prefix + "out.b", {1, scenes}, b2, rng);
  return h;
}

ScenePrediction scene_prediction(const Tensor& logits_row) {
  if (logits_row.ndim() != 2 || logits_row.rows() != 1)
    throw ShapeError("scene_prediction: expected [1 x C_s] logits, got " +
                     num::to_string(logits_row.shape()));
  ScenePrediction pred;
  pred.logits = num::transpose(logits_row);
  pred.probs = num::transpose(num::softmax_rows(logits_row));
  return pred;
}

ScenePrediction sf_forward(const branches::BranchOutput& events,
                           const branches::BranchOutput& objects, const MhaParams& p_eo,
                           const MhaParams& p_oe, const FusionHead& head,
                           const FusionOptions& options, FusionTrace* trace) {
  const bool use_logits = options.input == FusionInput::kLogits;
  const Tensor& e = use_logits ? events.logits : events.probs;
  const Tensor& o = use_logits ? objects.logits : objects.probs;
  if (e.ndim() != 2 || o.ndim() != 2 || e.cols() != 1 || o.cols() != 1)
    throw ShapeError("sf_forward: branch outputs must be column vectors");
  if (e.rows() + o.rows() != head.input_width())
    throw ShapeError("sf_forward: C_e + C_o = " + std::to_string(e.rows() + o.rows()) +
                     " but fusion head expects " + std::to_string(head.input_width()));

  Tensor joined;
  if (options.attention_enabled) {
    std::vector<Tensor>* attn = trace ? &trace->attention : nullptr;
    Tensor o_by_e = mha(o, e, e, p_eo, attn);  // objects caused by events
    Tensor e_by_o = mha(e, o, o, p_oe, attn);  // events caused by objects
    if (trace) {
      trace->objects_by_events = o_by_e;
      trace->events_by_objects = e_by_o;
    }
    joined = num::concat({num::add(e_by_o, e), num::add(o_by_e, o)}, 0);
  } else {
    joined = num::concat({e, o}, 0);
  }
  Tensor x = num::transpose(joined);  // [1 x (C_e + C_o)]
  Tensor hidden = branches::activate(num::add_row(num::matmul(x, head.w1), head.b1), options.activation);
  return scene_prediction(num::add_row(num::matmul(hidden, head.w2), head.b2));
}

Tensor ce_loss(const ScenePrediction& pred, std::span<const double> one_hot) {
  if (one_hot.size() != pred.probs.numel())
    throw ShapeError("ce_loss: label length " + std::to_string(one_hot.size()) +
                     " vs prediction " + num::to_string(pred.probs.shape()));
  std::size_t ones = 0;
  for (double y : one_hot) {
    if (y == 1.0) ++ones;
    else if (y != 0.0) throw ContractError("ce_loss: label is not one-hot");
  }
  if (ones != 1) throw ContractError("ce_loss: label is not one-hot");
  Tensor y = Tensor::column(one_hot);
  Tensor logp = num::log(num::clamp(pred.probs, 1e-12, 1.0));
  return num::scale(num::sum(num::mul(y, logp)), -1.0);
}

void LossWeights::validate() const {
  bool any = false;
  for (double l : lambda) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("loss weights must be finite and >= 0");
    any = any || l > 0.0;
  }
  if (!any) throw ConfigError("at least one loss weight must be positive");
}

LossBundle total_loss(const std::array<Tensor, 5>& components, const LossWeights& w) {
  w.validate();
  LossBundle b;
  double* slots[5] = {&b.events, &b.objects, &b.event_to_object, &b.object_to_event, &b.scene};
  for (std::size_t i = 0; i < 5; ++i) {
    if (!components[i].defined()) continue;
    const double value = components[i].item();
    if (!std::isfinite(value)) throw DomainError("total_loss: non-finite component");
    *slots[i] = value;
    if (w.lambda[i] == 0.0) continue;
    Tensor term = w.lambda[i] == 1.0 ? components[i] : num::scale(components[i], w.lambda[i]);
    b.total = b.total.defined() ? num::add(b.total, term) : term;
  }
  if (!b.total.defined()) throw ContractError("total_loss: every weighted component is missing");
  return b;
}

}  // namespace avsc::fusion
