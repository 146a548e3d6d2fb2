#include "avsc/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "avsc/errors.hpp"

namespace avsc::harness {

using nlohmann::json;

std::string to_string(Modality m) {
  switch (m) {
    case Modality::kBoth: return "both";
    case Modality::kAudio: return "audio";
    case Modality::kVisual: return "visual";
  }
  return "both";
}

Modality parse_modality(const std::string& text) {
  if (text == "both") return Modality::kBoth;
  if (text == "audio") return Modality::kAudio;
  if (text == "visual") return Modality::kVisual;
  throw ConfigError("unknown modality '" + text + "' (expected both, audio or visual)");
}

std::string to_string(Averaging a) { return a == Averaging::kMacro ? "macro" : "micro"; }

Averaging parse_averaging(const std::string& text) {
  if (text == "macro") return Averaging::kMacro;
  if (text == "micro") return Averaging::kMicro;
  throw ConfigError("unknown accuracy convention '" + text + "' (expected macro or micro)");
}

namespace {

std::string activation_name(branches::Activation a) {
  return a == branches::Activation::kRelu ? "relu" : "gelu";
}

branches::Activation parse_activation(const std::string& text) {
  if (text == "relu") return branches::Activation::kRelu;
  if (text == "gelu") return branches::Activation::kGelu;
  throw ConfigError("unknown activation '" + text + "' (expected relu or gelu)");
}

// Reads keys of one JSON object, rejecting anything not consumed.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected a JSON object");
  }

  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, _] : j_.items())
      if (!seen_.count(key)) throw ConfigError(where_ + ": unknown key '" + key + "'");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  template <class T, class Parse>
  void get_enum(const char* key, T& out, Parse parse) {
    std::string text;
    seen_.insert(key);
    if (!j_.contains(key)) return;
    get(key, text);
    out = parse(text);
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

void RunConfig::validate() const {
  require(preset == "desk" || preset == "paper", "preset must be desk or paper, got '" + preset + "'");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(data.n >= data.num_scenes, "data.n must be >= num_scenes");
  require(data.num_scenes >= 2, "data.num_scenes must be >= 2");
  require(data.num_events >= data.num_scenes && data.num_objects >= data.num_scenes,
          "data: num_events and num_objects must be >= num_scenes");
  require(model.embed_dim >= 1, "model.embed_dim must be >= 1");
  require(std::isfinite(optimizer.lr) && optimizer.lr > 0.0, "optimizer.lr must be > 0");
  require(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0, "optimizer.beta1 must be in [0,1)");
  require(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0, "optimizer.beta2 must be in [0,1)");
  require(optimizer.eps > 0.0, "optimizer.eps must be > 0");
  require(optimizer.weight_decay >= 0.0, "optimizer.weight_decay must be >= 0");
  require(fusion.heads >= 1 && fusion.head_dim >= 1 && fusion.hidden >= 1,
          "fusion: heads, head_dim and hidden must be >= 1");
  audio_config().validate();
  visual_config().validate();
  if (contrastive.enabled && model.modality == Modality::kBoth)
    contrastive_config().validate(data.num_events, data.num_objects);
  fusion::LossWeights{lambda}.validate();
  effective_weights().validate();
}

branches::AudioBranchConfig RunConfig::audio_config() const {
  branches::AudioBranchConfig c;
  c.grid_rows = data.grid_rows;
  c.grid_cols = data.grid_cols;
  c.patch_rows = audio.patch_rows;
  c.patch_cols = audio.patch_cols;
  c.n_layers = audio.n_layers;
  c.n_heads = audio.n_heads;
  c.d_model = audio.d_model;
  c.ffn_mult = audio.ffn_mult;
  c.num_events = data.num_events;
  c.embed_dim = model.embed_dim;
  return c;
}

branches::VisualBranchConfig RunConfig::visual_config() const {
  branches::VisualBranchConfig c;
  c.image_h = data.image_h;
  c.image_w = data.image_w;
  c.channels = data.image_channels;
  c.stem_patch = visual.stem_patch;
  c.stage_blocks = visual.stage_blocks;
  c.stage_channels = visual.stage_channels;
  c.expand = visual.expand;
  c.kernel = visual.kernel;
  c.num_objects = data.num_objects;
  c.embed_dim = model.embed_dim;
  return c;
}

ceoa::ContrastiveConfig RunConfig::contrastive_config() const {
  ceoa::ContrastiveConfig c;
  c.k = contrastive.k;
  c.mode = contrastive.mode;
  c.rng_seed = contrastive.rng_seed;
  c.normalize_rows = contrastive.normalize_rows;
  return c;
}

data::SceneSpec RunConfig::scene_spec() const {
  data::RecipeOptions recipe;
  recipe.num_scenes = data.num_scenes;
  recipe.num_events = data.num_events;
  recipe.num_objects = data.num_objects;
  recipe.on_fraction = data.on_fraction;
  recipe.min_row_distance = data.min_row_distance;
  data::SceneSpec spec = data::make_scene_spec(recipe, data.seed);
  spec.noise_sigma = data.noise_sigma;
  spec.grid_rows = data.grid_rows;
  spec.grid_cols = data.grid_cols;
  spec.num_images = data.num_images;
  spec.image_h = data.image_h;
  spec.image_w = data.image_w;
  spec.image_channels = data.image_channels;
  spec.event_threshold = data.event_threshold;
  spec.object_threshold = data.object_threshold;
  spec.validate();
  return spec;
}

fusion::LossWeights RunConfig::effective_weights() const {
  fusion::LossWeights w{lambda};
  if (!contrastive.enabled || model.modality != Modality::kBoth) w.lambda[2] = w.lambda[3] = 0.0;
  if (model.modality == Modality::kAudio) w.lambda[1] = 0.0;
  if (model.modality == Modality::kVisual) w.lambda[0] = 0.0;
  return w;
}

RunConfig preset(const std::string& name) {
  RunConfig cfg;
  if (name == "desk") return cfg;
  if (name == "paper") {
    cfg.preset = "paper";
    cfg.optimizer.lr = kPaperLearningRate;
    cfg.epochs = kPaperEpochs;
    cfg.batch_size = kPaperBatchSize;
    return cfg;
  }
  throw ConfigError("unknown preset '" + name + "' (expected desk or paper)");
}

json to_json(const RunConfig& c) {
  json j;
  j["preset"] = c.preset;
  j["seed"] = c.seed;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["accuracy"] = to_string(c.accuracy);
  j["out_dir"] = c.out_dir;
  const auto& d = c.data;
  j["data"] = {{"num_scenes", d.num_scenes},   {"num_events", d.num_events},
               {"num_objects", d.num_objects}, {"n", d.n},
               {"seed", d.seed},               {"noise_sigma", d.noise_sigma},
               {"on_fraction", d.on_fraction}, {"min_row_distance", d.min_row_distance},
               {"grid_rows", d.grid_rows},     {"grid_cols", d.grid_cols},
               {"num_images", d.num_images},   {"image_h", d.image_h},
               {"image_w", d.image_w},         {"image_channels", d.image_channels},
               {"event_threshold", d.event_threshold},
               {"object_threshold", d.object_threshold}};
  j["audio"] = {{"patch_rows", c.audio.patch_rows}, {"patch_cols", c.audio.patch_cols},
                {"n_layers", c.audio.n_layers},     {"n_heads", c.audio.n_heads},
                {"d_model", c.audio.d_model},       {"ffn_mult", c.audio.ffn_mult}};
  j["visual"] = {{"stem_patch", c.visual.stem_patch},
                 {"stage_blocks", c.visual.stage_blocks},
                 {"stage_channels", c.visual.stage_channels},
                 {"expand", c.visual.expand},
                 {"kernel", c.visual.kernel}};
  j["model"] = {{"embed_dim", c.model.embed_dim},
                {"activation", activation_name(c.model.activation)},
                {"modality", to_string(c.model.modality)}};
  j["contrastive"] = {{"enabled", c.contrastive.enabled},
                      {"k", c.contrastive.k},
                      {"mode", ceoa::to_string(c.contrastive.mode)},
                      {"rng_seed", c.contrastive.rng_seed},
                      {"normalize_rows", c.contrastive.normalize_rows}};
  j["fusion"] = {{"enabled", c.fusion.enabled},
                 {"heads", c.fusion.heads},
                 {"head_dim", c.fusion.head_dim},
                 {"hidden", c.fusion.hidden},
                 {"input", fusion::to_string(c.fusion.input)}};
  j["lambda"] = c.lambda;
  j["optimizer"] = {{"lr", c.optimizer.lr},       {"beta1", c.optimizer.beta1},
                    {"beta2", c.optimizer.beta2}, {"eps", c.optimizer.eps},
                    {"weight_decay", c.optimizer.weight_decay}};
  return j;
}

RunConfig from_json(const json& j, RunConfig c) {
  Reader top(j, "config");
  top.get("preset", c.preset);
  top.get("seed", c.seed);
  top.get("epochs", c.epochs);
  top.get("batch_size", c.batch_size);
  top.get_enum("accuracy", c.accuracy, parse_averaging);
  top.get("out_dir", c.out_dir);
  if (const json* s = top.child("data")) {
    Reader r(*s, "data");
    auto& d = c.data;
    r.get("num_scenes", d.num_scenes);
    r.get("num_events", d.num_events);
    r.get("num_objects", d.num_objects);
    r.get("n", d.n);
    r.get("seed", d.seed);
    r.get("noise_sigma", d.noise_sigma);
    r.get("on_fraction", d.on_fraction);
    r.get("min_row_distance", d.min_row_distance);
    r.get("grid_rows", d.grid_rows);
    r.get("grid_cols", d.grid_cols);
    r.get("num_images", d.num_images);
    r.get("image_h", d.image_h);
    r.get("image_w", d.image_w);
    r.get("image_channels", d.image_channels);
    r.get("event_threshold", d.event_threshold);
    r.get("object_threshold", d.object_threshold);
  }
  if (const json* s = top.child("audio")) {
    Reader r(*s, "audio");
    r.get("patch_rows", c.audio.patch_rows);
    r.get("patch_cols", c.audio.patch_cols);
    r.get("n_layers", c.audio.n_layers);
    r.get("n_heads", c.audio.n_heads);
    r.get("d_model", c.audio.d_model);
    r.get("ffn_mult", c.audio.ffn_mult);
  }
  if (const json* s = top.child("visual")) {
    Reader r(*s, "visual");
    r.get("stem_patch", c.visual.stem_patch);
    r.get("stage_blocks", c.visual.stage_blocks);
    r.get("stage_channels", c.visual.stage_channels);
    r.get("expand", c.visual.expand);
    r.get("kernel", c.visual.kernel);
  }
  if (const json* s = top.child("model")) {
    Reader r(*s, "model");
    r.get("embed_dim", c.model.embed_dim);
    r.get_enum("activation", c.model.activation, parse_activation);
    r.get_enum("modality", c.model.modality, parse_modality);
  }
  if (const json* s = top.child("contrastive")) {
    Reader r(*s, "contrastive");
    r.get("enabled", c.contrastive.enabled);
    r.get("k", c.contrastive.k);
    r.get_enum("mode", c.contrastive.mode, ceoa::parse_mode);
    r.get("rng_seed", c.contrastive.rng_seed);
    r.get("normalize_rows", c.contrastive.normalize_rows);
  }
  if (const json* s = top.child("fusion")) {
    Reader r(*s, "fusion");
    r.get("enabled", c.fusion.enabled);
    r.get("heads", c.fusion.heads);
    r.get("head_dim", c.fusion.head_dim);
    r.get("hidden", c.fusion.hidden);
    r.get_enum("input", c.fusion.input, fusion::parse_fusion_input);
  }
  top.get("lambda", c.lambda);
  if (const json* s = top.child("optimizer")) {
    Reader r(*s, "optimizer");
    r.get("lr", c.optimizer.lr);
    r.get("beta1", c.optimizer.beta1);
    r.get("beta2", c.optimizer.beta2);
    r.get("eps", c.optimizer.eps);
    r.get("weight_decay", c.optimizer.weight_decay);
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return from_json(j, std::move(base));
}

}  // namespace avsc::harness
