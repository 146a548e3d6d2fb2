#include "avsc/diagnostics.hpp"

#include <cmath>
#include <random>

#include "avsc/ceoa.hpp"
#include "avsc/fusion.hpp"
#include "avsc/model.hpp"
#include "avsc/ops.hpp"

namespace avsc::harness {

using num::Tensor;

namespace {

class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}

  Tensor uniform(num::Shape shape, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(num::numel_of(shape));
    for (double& x : v) x = u(rng_);
    return Tensor(std::move(shape), std::move(v), true);
  }

  // Uniform in [-hi, -lo] U [lo, hi].
  Tensor away_from_zero(num::Shape shape, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::bernoulli_distribution sign(0.5);
    std::vector<double> v(num::numel_of(shape));
    for (double& x : v) x = sign(rng_) ? u(rng_) : -u(rng_);
    return Tensor(std::move(shape), std::move(v), true);
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// Weighted sum with fixed random weights, so every output element matters.
Tensor probe(const Tensor& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> w(y.numel());
  for (double& x : w) x = u(rng);
  return num::sum(num::mul(y, Tensor(y.shape(), std::move(w))));
}

}  // namespace

std::vector<NamedCheck> check_ops(std::uint64_t seed, double h, double tol) {
  Draw d(seed);
  std::vector<NamedCheck> out;
  auto run = [&](const std::string& name, std::vector<Tensor> inputs,
                 const std::function<Tensor(const std::vector<Tensor>&)>& op) {
    const std::uint64_t ps = seed * 131 + out.size();
    auto f = [&, inputs, ps] { return probe(op(inputs), ps); };
    out.push_back({name, num::grad_check(f, inputs, h, tol)});
  };
  using V = std::vector<Tensor>;
  run("matmul", {d.uniform({3, 4}), d.uniform({4, 2})}, [](const V& x) { return num::matmul(x[0], x[1]); });
  run("add", {d.uniform({3, 4}), d.uniform({3, 4})}, [](const V& x) { return num::add(x[0], x[1]); });
  run("sub", {d.uniform({3, 4}), d.uniform({3, 4})}, [](const V& x) { return num::sub(x[0], x[1]); });
  run("mul", {d.uniform({3, 4}), d.uniform({3, 4})}, [](const V& x) { return num::mul(x[0], x[1]); });
  run("add_row", {d.uniform({3, 4}), d.uniform({1, 4})}, [](const V& x) { return num::add_row(x[0], x[1]); });
  run("scale", {d.uniform({3, 4})}, [](const V& x) { return num::scale(x[0], -1.7); });
  run("add_scalar", {d.uniform({3, 4})}, [](const V& x) { return num::add_scalar(x[0], 0.3); });
  run("relu", {d.away_from_zero({3, 4}, 0.05, 1.0)}, [](const V& x) { return num::relu(x[0]); });
  run("gelu", {d.uniform({3, 4}, -3.0, 3.0)}, [](const V& x) { return num::gelu(x[0]); });
  run("sigmoid", {d.uniform({3, 4}, -6.0, 6.0)}, [](const V& x) { return num::sigmoid(x[0]); });
  run("log", {d.uniform({3, 4}, 0.2, 3.0)}, [](const V& x) { return num::log(x[0]); });
  run("clamp", {d.away_from_zero({3, 4}, 0.05, 1.0)}, [](const V& x) { return num::clamp(x[0], -0.5, 0.5); });
  run("softmax_rows", {d.uniform({3, 5}, -2.0, 2.0)}, [](const V& x) { return num::softmax_rows(x[0]); });
  run("sum", {d.uniform({3, 4})}, [](const V& x) { return num::scale(num::sum(x[0]), 1.0); });
  run("mean", {d.uniform({3, 4})}, [](const V& x) { return num::mean(x[0]); });
  run("mean_rows", {d.uniform({3, 4})}, [](const V& x) { return num::mean_rows(x[0]); });
  run("l2_normalize_rows", {d.uniform({3, 4})}, [](const V& x) { return num::l2_normalize_rows(x[0]); });
  run("transpose", {d.uniform({3, 4})}, [](const V& x) { return num::transpose(x[0]); });
  run("concat_rows", {d.uniform({2, 3}), d.uniform({1, 3})}, [](const V& x) { return num::concat(x, 0); });
  run("concat_cols", {d.uniform({2, 3}), d.uniform({2, 2})}, [](const V& x) { return num::concat(x, 1); });
  run("row_select", {d.uniform({5, 3})}, [](const V& x) { return num::row_select(x[0], {4, 1, 1}); });
  run("reshape", {d.uniform({3, 4})}, [](const V& x) { return num::reshape(x[0], {2, 6}); });
  run("patchify", {d.uniform({4 * 6, 2})}, [](const V& x) { return num::patchify(x[0], 4, 6, 2, 3); });
  run("depthwise_conv2d", {d.uniform({5 * 4, 3}), d.uniform({9, 3})},
      [](const V& x) { return num::depthwise_conv2d(x[0], x[1], 5, 4, 3); });

  // Loss building blocks.
  run("bce_loss", {d.uniform({6, 1}, 0.05, 0.95)}, [](const V& x) {
    return branches::bce_loss(x[0], Tensor({6, 1}, {1, 0, 0, 1, 1, 0}));
  });
  run("pairwise_contrastive", {d.uniform({3, 4}), d.uniform({3, 4}), d.uniform({3, 4})},
      [](const V& x) { return ceoa::pairwise_contrastive(x[0], x[1], x[2]); });
  {
    model::ParamSet ps;
    auto p = fusion::MhaParams::create(2, 3, ps, d.rng(), "m.");
    std::vector<Tensor> inputs{d.uniform({4, 1}), d.uniform({5, 1}), d.uniform({5, 1})};
    for (const auto& t : ps.tensors()) inputs.push_back(t);
    run("mha", inputs, [p](const V& x) { return fusion::mha(x[0], x[1], x[2], p); });
  }
  run("ce_loss", {d.uniform({1, 4}, -2.0, 2.0)}, [](const V& x) {
    const double y[] = {0, 0, 1, 0};
    return fusion::ce_loss(fusion::scene_prediction(x[0]), y);
  });
  return out;
}

RunConfig tiny_config(std::uint64_t seed, branches::Activation act) {
  RunConfig c;
  c.seed = seed;
  c.data.num_scenes = 3;
  c.data.num_events = 6;
  c.data.num_objects = 6;
  c.data.n = 3;
  c.data.seed = seed + 1000;
  c.data.grid_rows = 8;
  c.data.grid_cols = 4;
  c.data.num_images = 2;
  c.data.image_h = 8;
  c.data.image_w = 8;
  c.audio = {4, 2, 1, 2, 8, 2};
  c.visual.stem_patch = 2;
  c.visual.stage_blocks = {1, 1};
  c.visual.stage_channels = {3, 4};
  c.visual.expand = 2;
  c.visual.kernel = 3;
  c.model.embed_dim = 5;
  c.model.activation = act;
  c.contrastive.k = 2;
  c.fusion.heads = 2;
  c.fusion.head_dim = 3;
  c.fusion.hidden = 5;
  c.lambda = {0.5, 0.7, 1.3, 0.9, 1.1};
  return c;
}

num::GradCheckReport check_composite(std::uint64_t seed, branches::Activation act,
                                     CompositeMode mode, double h, double tol) {
  const RunConfig cfg = tiny_config(seed, act);
  SceneModel model(cfg);
  // Evaluate away from the near-uniform attention of a fresh init, where the
  // per-class logits are ~0.1 and attention projections get ~1e-8 gradients.
  for (auto t : model.params().tensors())
    for (double& x : t.mutable_data()) x *= kCompositeWeightScale;
  const data::Dataset ds = build_dataset(cfg);
  const data::Sample& sample = ds.samples[0];
  auto f = [&] { return model.forward(sample, true).losses.total; };
  if (mode == CompositeMode::kDirectional)
    return num::directional_check(f, model.params().tensors(), seed, h, tol, model.params().names());
  return num::grad_check(f, model.params().tensors(), h, tol, model.params().names());
}

}  // namespace avsc::harness
