#include "avsc/model.hpp"

#include <cmath>

#include "avsc/errors.hpp"
#include "avsc/ops.hpp"

namespace avsc::harness {

using num::Tensor;

namespace {

// One init stream per component, so dropping a component leaves the others'
// initial weights unchanged.
std::mt19937_64 init_stream(std::uint64_t seed, std::uint32_t component) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    component, 0x5eedu};
  return std::mt19937_64(seq);
}

Tensor audio_input(const data::Sample& s, const data::SceneSpec& spec) {
  return Tensor({spec.grid_rows, spec.grid_cols}, s.audio);
}

std::vector<Tensor> image_inputs(const data::Sample& s, const data::SceneSpec& spec) {
  const std::size_t per = spec.image_size();
  if (s.images.size() != per * spec.num_images)
    throw ShapeError("sample images: expected " + std::to_string(per * spec.num_images) +
                     " values, got " + std::to_string(s.images.size()));
  std::vector<Tensor> out;
  for (std::size_t i = 0; i < spec.num_images; ++i)
    out.emplace_back(num::Shape{spec.image_h * spec.image_w, spec.image_channels},
                     std::vector<double>(s.images.begin() + i * per, s.images.begin() + (i + 1) * per));
  return out;
}

}  // namespace

SceneModel::SceneModel(const RunConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const auto mod = cfg_.model.modality;
  if (mod != Modality::kVisual) {
    auto rng = init_stream(cfg_.seed, 1);
    audio_ = branches::AudioBranch::create(cfg_.audio_config(), params_, rng, "audio.");
  }
  if (mod != Modality::kAudio) {
    auto rng = init_stream(cfg_.seed, 2);
    visual_ = branches::VisualBranch::create(cfg_.visual_config(), params_, rng, "visual.");
  }
  if (mod == Modality::kBoth) {
    if (cfg_.fusion.enabled) {
      auto rng = init_stream(cfg_.seed, 3);
      mha_eo_ = fusion::MhaParams::create(cfg_.fusion.heads, cfg_.fusion.head_dim, params_, rng, "sf.o_by_e.");
      mha_oe_ = fusion::MhaParams::create(cfg_.fusion.heads, cfg_.fusion.head_dim, params_, rng, "sf.e_by_o.");
    }
    auto rng = init_stream(cfg_.seed, 4);
    fusion_head_ = fusion::FusionHead::create(cfg_.data.num_events + cfg_.data.num_objects,
                                              cfg_.fusion.hidden, cfg_.data.num_scenes, params_,
                                              rng, "fusion.");
  } else {
    auto rng = init_stream(cfg_.seed, 5);
    const std::size_t in = mod == Modality::kAudio ? cfg_.data.num_events : cfg_.data.num_objects;
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    single_w_ = params_.add_uniform("scene.w", {in, cfg_.data.num_scenes}, bound, rng);
    single_b_ = params_.add_uniform("scene.b", {1, cfg_.data.num_scenes}, bound, rng);
  }
}

fusion::ScenePrediction SceneModel::scene_from(const branches::BranchOutput* events,
                                               const branches::BranchOutput* objects) const {
  if (events && objects) {
    fusion::FusionOptions opt;
    opt.attention_enabled = cfg_.fusion.enabled;
    opt.input = cfg_.fusion.input;
    opt.activation = cfg_.model.activation;
    return fusion::sf_forward(*events, *objects, mha_eo_, mha_oe_, fusion_head_, opt);
  }
  const branches::BranchOutput& only = events ? *events : *objects;
  Tensor row = num::transpose(only.logits);
  return fusion::scene_prediction(num::add_row(num::matmul(row, single_w_), single_b_));
}

SampleOutputs SceneModel::forward(const data::Sample& sample, bool with_losses,
                                  std::mt19937_64* rkm) const {
  // Shapes are taken from the config; a mismatching sample fails in the branch.
  data::SceneSpec dims;
  dims.grid_rows = cfg_.data.grid_rows;
  dims.grid_cols = cfg_.data.grid_cols;
  dims.num_images = cfg_.data.num_images;
  dims.image_h = cfg_.data.image_h;
  dims.image_w = cfg_.data.image_w;
  dims.image_channels = cfg_.data.image_channels;

  SampleOutputs out;
  const auto act = cfg_.model.activation;
  if (audio_) {
    if (sample.audio.size() != dims.audio_size())
      throw ShapeError("sample audio: expected " + std::to_string(dims.audio_size()) + " values");
    out.events = audio_->forward(audio_input(sample, dims), act);
  }
  if (visual_) out.objects = visual_->forward(image_inputs(sample, dims), act);
  out.scene = scene_from(audio_ ? &out.events : nullptr, visual_ ? &out.objects : nullptr);
  if (!with_losses) return out;

  if (audio_) out.components[0] = branches::bce_loss(out.events.probs, Tensor::column(sample.event_label));
  if (visual_) out.components[1] = branches::bce_loss(out.objects.probs, Tensor::column(sample.object_label));
  if (audio_ && visual_ && cfg_.contrastive.enabled) {
    const auto bank = ceoa::select_bank(out.events.probs.data(), out.objects.probs.data(),
                                        *out.events.head, *out.objects.head,
                                        cfg_.contrastive_config(), rkm);
    out.components[2] = ceoa::contrastive_loss_e2o(bank);
    out.components[3] = ceoa::contrastive_loss_o2e(bank);
  }
  out.components[4] = fusion::ce_loss(out.scene, sample.scene_label);
  out.losses = fusion::total_loss(out.components, cfg_.effective_weights());
  return out;
}

std::vector<double> SceneModel::predict(const data::Sample& sample) const {
  return forward(sample, false).scene.probs.to_vector();
}

data::Dataset build_dataset(const RunConfig& cfg) {
  return data::generate_dataset(cfg.scene_spec(), cfg.data.n, cfg.data.seed);
}

std::mt19937_64 rkm_stream(std::uint64_t seed, std::uint64_t epoch, std::uint64_t sample) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(sample),
                    static_cast<std::uint32_t>(sample >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace avsc::harness
