#include "avsc/branches.hpp"

#include <cmath>

#include "avsc/errors.hpp"
#include "avsc/ops.hpp"

namespace avsc::branches {

using num::Tensor;

namespace {

double fan_in_bound(std::size_t fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); }

// Linear layer weight [in x out] and bias [1 x out], both U(+-1/sqrt(in)).
std::pair<Tensor, Tensor> linear(model::ParamSet& params, const std::string& name, std::size_t in,
                                 std::size_t out, std::mt19937_64& rng) {
  const double b = fan_in_bound(in);
  Tensor w = params.add_uniform(name + ".w", {in, out}, b, rng);
  Tensor bias = params.add_uniform(name + ".b", {1, out}, b, rng);
  return {w, bias};
}

ClassifierHead make_head(model::ParamSet& params, const std::string& name, std::size_t classes,
                         std::size_t dim, std::mt19937_64& rng) {
  const double b = fan_in_bound(dim);
  ClassifierHead h;
  h.weight = params.add_uniform(name + ".w", {classes, dim}, b, rng);
  h.bias = params.add_uniform(name + ".b", {classes, 1}, b, rng);
  return h;
}

Tensor dense(const Tensor& x, const Tensor& w, const Tensor& b) {
  return num::add_row(num::matmul(x, w), b);
}

}  // namespace

Tensor activate(const Tensor& x, Activation act) {
  return act == Activation::kRelu ? num::relu(x) : num::gelu(x);
}

void AudioBranchConfig::validate() const {
  if (grid_rows == 0 || grid_cols == 0 || patch_rows == 0 || patch_cols == 0)
    throw ConfigError("audio: grid and patch sizes must be positive");
  if (grid_rows % patch_rows || grid_cols % patch_cols)
    throw ShapeError("audio: " + std::to_string(grid_rows) + "x" + std::to_string(grid_cols) +
                     " grid not divisible by " + std::to_string(patch_rows) + "x" +
                     std::to_string(patch_cols) + " patches");
  if (n_heads == 0 || d_model == 0 || d_model % n_heads)
    throw ConfigError("audio: d_model must be divisible by n_heads");
  if (num_events < 2) throw ConfigError("audio: need at least 2 event classes");
  if (embed_dim == 0 || ffn_mult == 0) throw ConfigError("audio: embed_dim and ffn_mult must be positive");
}

void VisualBranchConfig::validate() const {
  if (stage_blocks.empty() || stage_blocks.size() != stage_channels.size())
    throw ConfigError("visual: stage_blocks and stage_channels must be non-empty and equal length");
  for (std::size_t i = 0; i < stage_channels.size(); ++i) {
    if (stage_channels[i] == 0) throw ConfigError("visual: channel counts must be positive");
    if (i && stage_channels[i] < stage_channels[i - 1])
      throw ConfigError("visual: stage channels must be non-decreasing");
  }
  if (num_objects < 2) throw ConfigError("visual: need at least 2 object classes");
  if (kernel % 2 == 0) throw ConfigError("visual: kernel size must be odd");
  if (channels == 0 || expand == 0 || embed_dim == 0 || stem_patch == 0)
    throw ConfigError("visual: channels, expand, embed_dim and stem_patch must be positive");
  const std::size_t step = stem_patch << (stage_blocks.size() - 1);
  if (image_h < step || image_w < step || image_h % step || image_w % step)
    throw ShapeError("visual: " + std::to_string(image_h) + "x" + std::to_string(image_w) +
                     " image is smaller than or not divisible by the total downsample step " +
                     std::to_string(step));
}

Tensor ClassifierHead::apply(const Tensor& embedding_row) const {
  return num::add(num::matmul(weight, num::transpose(embedding_row)), bias);
}

AudioBranch AudioBranch::create(const AudioBranchConfig& cfg, model::ParamSet& params,
                                std::mt19937_64& rng, const std::string& prefix) {
  cfg.validate();
  AudioBranch a;
  a.cfg_ = cfg;
  const std::size_t d = cfg.d_model, dh = d / cfg.n_heads, ff = cfg.ffn_mult * d;
  std::tie(a.patch_w_, a.patch_b_) =
      linear(params, prefix + "patch", cfg.patch_rows * cfg.patch_cols, d, rng);
  a.pos_ = params.add_uniform(prefix + "pos", {cfg.num_patches(), d}, fan_in_bound(d), rng);
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const std::string lp = prefix + "layer" + std::to_string(l) + ".";
    Layer layer;
    for (std::size_t h = 0; h < cfg.n_heads; ++h) {
      const std::string hp = lp + "head" + std::to_string(h) + ".";
      layer.wq.push_back(params.add_uniform(hp + "wq", {d, dh}, fan_in_bound(d), rng));
      layer.wk.push_back(params.add_uniform(hp + "wk", {d, dh}, fan_in_bound(d), rng));
      layer.wv.push_back(params.add_uniform(hp + "wv", {d, dh}, fan_in_bound(d), rng));
    }
    std::tie(layer.wo, layer.bo) = linear(params, lp + "attn_out", d, d, rng);
    std::tie(layer.w1, layer.b1) = linear(params, lp + "ffn1", d, ff, rng);
    std::tie(layer.w2, layer.b2) = linear(params, lp + "ffn2", ff, d, rng);
    a.layers_.push_back(std::move(layer));
  }
  std::tie(a.embed_w_, a.embed_b_) = linear(params, prefix + "embed", d, cfg.embed_dim, rng);
  a.head_ = make_head(params, prefix + "head", cfg.num_events, cfg.embed_dim, rng);
  return a;
}

BranchOutput AudioBranch::forward(const Tensor& features, Activation act) const {
  if (features.ndim() != 2 || features.rows() != cfg_.grid_rows || features.cols() != cfg_.grid_cols)
    throw ShapeError("audio: expected " + std::to_string(cfg_.grid_rows) + "x" +
                     std::to_string(cfg_.grid_cols) + " features, got " +
                     num::to_string(features.shape()));
  const double inv_sqrt_dh =
      1.0 / std::sqrt(static_cast<double>(cfg_.d_model / cfg_.n_heads));

  Tensor pixels = num::reshape(features, {cfg_.grid_rows * cfg_.grid_cols, 1});
  Tensor tokens = num::patchify(pixels, cfg_.grid_rows, cfg_.grid_cols, cfg_.patch_rows, cfg_.patch_cols);
  Tensor x = num::add(dense(tokens, patch_w_, patch_b_), pos_);

  for (const auto& layer : layers_) {
    std::vector<Tensor> heads;
    for (std::size_t h = 0; h < cfg_.n_heads; ++h) {
      Tensor q = num::matmul(x, layer.wq[h]);
      Tensor k = num::matmul(x, layer.wk[h]);
      Tensor v = num::matmul(x, layer.wv[h]);
      Tensor attn = num::softmax_rows(num::scale(num::matmul(q, num::transpose(k)), inv_sqrt_dh));
      heads.push_back(num::matmul(attn, v));
    }
    Tensor mixed = heads.size() == 1 ? heads[0] : num::concat(heads, 1);
    x = num::add(x, dense(mixed, layer.wo, layer.bo));
    Tensor hidden = activate(dense(x, layer.w1, layer.b1), act);
    x = num::add(x, dense(hidden, layer.w2, layer.b2));
  }

  Tensor pooled = num::mean_rows(x);
  Tensor embedding = activate(dense(pooled, embed_w_, embed_b_), act);
  BranchOutput out;
  out.logits = head_.apply(embedding);
  out.probs = num::sigmoid(out.logits);
  out.head = &head_;
  return out;
}

VisualBranch VisualBranch::create(const VisualBranchConfig& cfg, model::ParamSet& params,
                                  std::mt19937_64& rng, const std::string& prefix) {
  cfg.validate();
  VisualBranch v;
  v.cfg_ = cfg;
  std::size_t in_ch = cfg.channels;
  for (std::size_t s = 0; s < cfg.stage_blocks.size(); ++s) {
    const std::string sp = prefix + "stage" + std::to_string(s) + ".";
    const std::size_t patch = s == 0 ? cfg.stem_patch : 2;
    const std::size_t c = cfg.stage_channels[s];
    Stage stage;
    std::tie(stage.down_w, stage.down_b) =
        linear(params, sp + (s == 0 ? "stem" : "down"), patch * patch * in_ch, c, rng);
    for (std::size_t b = 0; b < cfg.stage_blocks[s]; ++b) {
      const std::string bp = sp + "block" + std::to_string(b) + ".";
      Block block;
      const double kb = fan_in_bound(cfg.kernel * cfg.kernel);
      block.dw = params.add_uniform(bp + "dw.w", {cfg.kernel * cfg.kernel, c}, kb, rng);
      block.dw_b = params.add_uniform(bp + "dw.b", {1, c}, kb, rng);
      std::tie(block.pw1, block.pw1_b) = linear(params, bp + "pw1", c, cfg.expand * c, rng);
      std::tie(block.pw2, block.pw2_b) = linear(params, bp + "pw2", cfg.expand * c, c, rng);
      stage.blocks.push_back(std::move(block));
    }
    v.stages_.push_back(std::move(stage));
    in_ch = c;
  }
  std::tie(v.embed_w_, v.embed_b_) = linear(params, prefix + "embed", in_ch, cfg.embed_dim, rng);
  v.head_ = make_head(params, prefix + "head", cfg.num_objects, cfg.embed_dim, rng);
  return v;
}

Tensor VisualBranch::image_features(const Tensor& image, Activation act) const {
  std::size_t h = cfg_.image_h, w = cfg_.image_w;
  Tensor x = image;
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    const std::size_t patch = s == 0 ? cfg_.stem_patch : 2;
    x = dense(num::patchify(x, h, w, patch, patch), stages_[s].down_w, stages_[s].down_b);
    h /= patch;
    w /= patch;
    for (const auto& b : stages_[s].blocks) {
      Tensor y = num::add_row(num::depthwise_conv2d(x, b.dw, h, w, cfg_.kernel), b.dw_b);
      y = activate(dense(y, b.pw1, b.pw1_b), act);
      x = num::add(x, dense(y, b.pw2, b.pw2_b));
    }
  }
  return num::mean_rows(x);
}

BranchOutput VisualBranch::forward(const std::vector<Tensor>& images, Activation act) const {
  if (images.empty()) throw ShapeError("visual: need at least one image");
  const std::size_t pixels = cfg_.image_h * cfg_.image_w;
  Tensor acc;
  for (const auto& img : images) {
    if (img.ndim() != 2 || img.rows() != pixels || img.cols() != cfg_.channels)
      throw ShapeError("visual: expected image [" + std::to_string(pixels) + "x" +
                       std::to_string(cfg_.channels) + "], got " + num::to_string(img.shape()));
    Tensor f = image_features(img, act);
    acc = acc.defined() ? num::add(acc, f) : f;
  }
  Tensor pooled = images.size() == 1 ? acc : num::scale(acc, 1.0 / static_cast<double>(images.size()));
  Tensor embedding = activate(dense(pooled, embed_w_, embed_b_), act);
  BranchOutput out;
  out.logits = head_.apply(embedding);
  out.probs = num::sigmoid(out.logits);
  out.head = &head_;
  return out;
}

Tensor bce_loss(const Tensor& probs, const Tensor& labels) {
  if (probs.shape() != labels.shape())
    throw ShapeError("bce_loss: shape mismatch " + num::to_string(probs.shape()) + " vs " +
                     num::to_string(labels.shape()));
  for (double y : labels.data())
    if (y != 0.0 && y != 1.0) throw ContractError("bce_loss: labels must be 0 or 1");
  constexpr double kEps = 1e-12;
  Tensor p = num::clamp(probs, kEps, 1.0 - kEps);
  Tensor not_labels = num::add_scalar(num::scale(labels, -1.0), 1.0);
  Tensor pos = num::mul(labels, num::log(p));
  Tensor neg = num::mul(not_labels, num::log(num::add_scalar(num::scale(p, -1.0), 1.0)));
  return num::scale(num::sum(num::add(pos, neg)), -1.0);
}

}  // namespace avsc::branches
