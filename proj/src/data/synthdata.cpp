#include "avsc/synthdata.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "avsc/errors.hpp"

namespace avsc::data {
namespace {

enum class Stream : std::uint32_t { kRates = 1, kScenes, kSoft, kRender, kTemplates };

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t index, Stream tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(tag)};
  return std::mt19937_64(seq);
}

double linf_rows(const std::vector<double>& m, std::size_t cols, std::size_t a, std::size_t b) {
  double d = 0.0;
  for (std::size_t c = 0; c < cols; ++c) d = std::max(d, std::abs(m[a * cols + c] - m[b * cols + c]));
  return d;
}

double min_pairwise(const std::vector<double>& m, std::size_t rows, std::size_t cols) {
  double best = INFINITY;
  for (std::size_t a = 0; a < rows; ++a)
    for (std::size_t b = a + 1; b < rows; ++b) best = std::min(best, linf_rows(m, cols, a, b));
  return best;
}

std::vector<double> draw_rates(std::size_t scenes, std::size_t classes, double on_fraction,
                               double on_lo, double on_hi, double off_lo, double off_hi,
                               std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> rates(scenes * classes);
  for (std::size_t s = 0; s < scenes; ++s) {
    // Signature class: distinct per scene while classes >= scenes.
    const std::size_t signature = (s * classes) / scenes;
    for (std::size_t c = 0; c < classes; ++c) {
      const bool on = c == signature || unit(rng) < on_fraction;
      const double u = unit(rng);
      rates[s * classes + c] = on ? on_lo + (on_hi - on_lo) * u : off_lo + (off_hi - off_lo) * u;
    }
  }
  // Signature classes are off in every other scene.
  for (std::size_t s = 0; s < scenes; ++s) {
    const std::size_t signature = (s * classes) / scenes;
    for (std::size_t o = 0; o < scenes; ++o)
      if (o != s) {
        const double u = unit(rng);
        rates[o * classes + signature] = off_lo + (off_hi - off_lo) * u;
      }
  }
  return rates;
}

void gaussian_bump(std::vector<double>& out, std::size_t rows, std::size_t cols,
                   std::size_t channels, std::size_t channel, double cy, double cx, double sy,
                   double sx, double amp) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const double dy = (static_cast<double>(r) - cy) / sy;
      const double dx = (static_cast<double>(c) - cx) / sx;
      out[(r * cols + c) * channels + channel] += amp * std::exp(-0.5 * (dy * dy + dx * dx));
    }
}

}  // namespace

void SceneSpec::validate() const {
  if (num_scenes < 2 || num_events < 2 || num_objects < 2)
    throw ConfigError("scene spec: need at least 2 scenes, events and objects");
  if (event_rates.size() != num_scenes * num_events || object_rates.size() != num_scenes * num_objects)
    throw ConfigError("scene spec: rate matrix sizes do not match class counts");
  for (double r : event_rates)
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("scene spec: event rate outside [0,1]");
  for (double r : object_rates)
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("scene spec: object rate outside [0,1]");
  for (std::size_t a = 0; a < num_scenes; ++a)
    for (std::size_t b = a + 1; b < num_scenes; ++b)
      if (linf_rows(event_rates, num_events, a, b) == 0.0 &&
          linf_rows(object_rates, num_objects, a, b) == 0.0)
        throw ConfigError("scene spec: scenes " + std::to_string(a) + " and " + std::to_string(b) +
                          " have identical rate rows");
  for (double t : {event_threshold, object_threshold})
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("scene spec: threshold outside [0,1]");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
    throw ConfigError("scene spec: noise_sigma must be finite and >= 0");
  if (grid_rows == 0 || grid_cols == 0 || num_images == 0 || image_h == 0 || image_w == 0 ||
      image_channels == 0)
    throw ConfigError("scene spec: feature dimensions must be positive");
}

SceneSpec make_scene_spec(const RecipeOptions& recipe, std::uint64_t seed) {
  if (recipe.num_scenes < 2 || recipe.num_events < recipe.num_scenes ||
      recipe.num_objects < recipe.num_scenes)
    throw ConfigError("scene recipe: need C_s >= 2 and C_e, C_o >= C_s");
  SceneSpec spec;
  spec.num_scenes = recipe.num_scenes;
  spec.num_events = recipe.num_events;
  spec.num_objects = recipe.num_objects;
  spec.template_seed = seed;
  auto rng = make_stream(seed, 0, Stream::kRates);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    spec.event_rates = draw_rates(recipe.num_scenes, recipe.num_events, recipe.on_fraction, 0.4, 1.0,
                                  0.0, 0.02, rng);
    spec.object_rates = draw_rates(recipe.num_scenes, recipe.num_objects, recipe.on_fraction, 0.95,
                                   1.0, 0.0, 0.6, rng);
    if (min_pairwise(spec.event_rates, spec.num_scenes, spec.num_events) >= recipe.min_row_distance &&
        min_pairwise(spec.object_rates, spec.num_scenes, spec.num_objects) >= recipe.min_row_distance)
      return spec;
  }
  throw ConfigError("scene recipe: could not reach the requested row distance");
}

std::vector<double> binarize_pseudolabels(std::span<const double> soft, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0))
    throw ConfigError("binarize: threshold " + std::to_string(threshold) + " outside [0,1]");
  std::vector<double> out(soft.size());
  for (std::size_t i = 0; i < soft.size(); ++i) out[i] = soft[i] >= threshold ? 1.0 : 0.0;
  return out;
}

Templates make_templates(const SceneSpec& spec) {
  auto rng = make_stream(spec.template_seed, 0, Stream::kTemplates);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Templates t;
  const auto T = static_cast<double>(spec.grid_rows), F = static_cast<double>(spec.grid_cols);
  for (std::size_t e = 0; e < spec.num_events; ++e) {
    std::vector<double> grid(spec.audio_size(), 0.0);
    const double cy = unit(rng) * (T - 1.0), cx = unit(rng) * (F - 1.0);
    const double sy = 1.5 + 2.5 * unit(rng), sx = 1.0 + 2.0 * unit(rng);
    gaussian_bump(grid, spec.grid_rows, spec.grid_cols, 1, 0, cy, cx, sy, sx, 1.0);
    t.events.push_back(std::move(grid));
  }
  const auto H = static_cast<double>(spec.image_h), W = static_cast<double>(spec.image_w);
  for (std::size_t o = 0; o < spec.num_objects; ++o) {
    std::vector<double> img(spec.image_size(), 0.0);
    const double cy = unit(rng) * (H - 1.0), cx = unit(rng) * (W - 1.0);
    const double s = 1.5 + 1.5 * unit(rng);
    for (std::size_t ch = 0; ch < spec.image_channels; ++ch)
      gaussian_bump(img, spec.image_h, spec.image_w, spec.image_channels, ch, cy, cx, s, s,
                    0.5 + 0.5 * unit(rng));
    t.objects.push_back(std::move(img));
  }
  return t;
}

RenderedFeatures render_features(std::span<const double> event_label,
                                 std::span<const double> object_label, const SceneSpec& spec,
                                 const Templates& templates, std::uint64_t seed) {
  if (event_label.size() != spec.num_events || object_label.size() != spec.num_objects)
    throw ShapeError("render_features: label lengths do not match the scene spec");
  RenderedFeatures out;
  out.audio.assign(spec.audio_size(), 0.0);
  for (std::size_t e = 0; e < spec.num_events; ++e)
    if (event_label[e] != 0.0)
      for (std::size_t i = 0; i < out.audio.size(); ++i) out.audio[i] += templates.events[e][i];

  std::vector<double> frame(spec.image_size(), 0.0);
  for (std::size_t o = 0; o < spec.num_objects; ++o)
    if (object_label[o] != 0.0)
      for (std::size_t i = 0; i < frame.size(); ++i) frame[i] += templates.objects[o][i];
  out.images.reserve(frame.size() * spec.num_images);
  for (std::size_t n = 0; n < spec.num_images; ++n) out.images.insert(out.images.end(), frame.begin(), frame.end());

  if (spec.noise_sigma > 0.0) {
    auto rng = make_stream(seed, 0, Stream::kRender);
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    for (auto& v : out.audio) v += noise(rng);
    for (auto& v : out.images) v += noise(rng);
  }
  return out;
}

Dataset generate_dataset(const SceneSpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  if (n < spec.num_scenes)
    throw ConfigError("generate_dataset: n=" + std::to_string(n) + " is smaller than C_s=" +
                      std::to_string(spec.num_scenes));
  Dataset ds;
  ds.spec = spec;
  ds.seed = seed;

  // Balanced scene list: floor(n / C_s) of each, remainder scenes drawn
  // without replacement, then shuffled.
  auto scene_rng = make_stream(seed, 0, Stream::kScenes);
  std::vector<std::size_t> scenes;
  for (std::size_t s = 0; s < spec.num_scenes; ++s) scenes.insert(scenes.end(), n / spec.num_scenes, s);
  std::vector<std::size_t> extra(spec.num_scenes);
  std::iota(extra.begin(), extra.end(), 0);
  std::shuffle(extra.begin(), extra.end(), scene_rng);
  scenes.insert(scenes.end(), extra.begin(), extra.begin() + static_cast<std::ptrdiff_t>(n % spec.num_scenes));
  std::shuffle(scenes.begin(), scenes.end(), scene_rng);

  const Templates templates = make_templates(spec);
  ds.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    Sample& s = ds.samples[i];
    s.scene = scenes[i];
    s.scene_label.assign(spec.num_scenes, 0.0);
    s.scene_label[s.scene] = 1.0;
    auto rng = make_stream(seed, i, Stream::kSoft);
    std::normal_distribution<double> noise(0.0, spec.noise_sigma > 0.0 ? spec.noise_sigma : 1.0);
    auto perturb = [&](double rate) {
      return spec.noise_sigma > 0.0 ? std::clamp(rate + noise(rng), 0.0, 1.0) : rate;
    };
    s.event_soft.resize(spec.num_events);
    for (std::size_t c = 0; c < spec.num_events; ++c) s.event_soft[c] = perturb(spec.event_rate(s.scene, c));
    s.object_soft.resize(spec.num_objects);
    for (std::size_t c = 0; c < spec.num_objects; ++c) s.object_soft[c] = perturb(spec.object_rate(s.scene, c));
    s.event_label = binarize_pseudolabels(s.event_soft, spec.event_threshold);
    s.object_label = binarize_pseudolabels(s.object_soft, spec.object_threshold);
    auto features = render_features(s.event_label, s.object_label, spec, templates,
                                    seed ^ (0x9E3779B97F4A7C15ULL * (i + 1)));
    s.audio = std::move(features.audio);
    s.images = std::move(features.images);
  }

  // Stratified split: per scene, the first 70% (in index order) train.
  for (std::size_t sc = 0; sc < spec.num_scenes; ++sc) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i)
      if (ds.samples[i].scene == sc) members.push_back(i);
    const auto n_train = static_cast<std::size_t>(std::llround(0.7 * static_cast<double>(members.size())));
    for (std::size_t j = 0; j < members.size(); ++j)
      (j < n_train ? ds.train : ds.test).push_back(members[j]);
  }
  std::sort(ds.train.begin(), ds.train.end());
  std::sort(ds.test.begin(), ds.test.end());
  return ds;
}

namespace {

constexpr const char* kFormat = "avsc-dataset";
constexpr int kVersion = 1;

nlohmann::json spec_to_json(const SceneSpec& s) {
  return {{"num_scenes", s.num_scenes},     {"num_events", s.num_events},
          {"num_objects", s.num_objects},   {"event_rates", s.event_rates},
          {"object_rates", s.object_rates}, {"noise_sigma", s.noise_sigma},
          {"grid_rows", s.grid_rows},       {"grid_cols", s.grid_cols},
          {"num_images", s.num_images},     {"image_h", s.image_h},
          {"image_w", s.image_w},           {"image_channels", s.image_channels},
          {"event_threshold", s.event_threshold}, {"object_threshold", s.object_threshold},
          {"template_seed", s.template_seed}};
}

SceneSpec spec_from_json(const nlohmann::json& j) {
  SceneSpec s;
  s.num_scenes = j.at("num_scenes");
  s.num_events = j.at("num_events");
  s.num_objects = j.at("num_objects");
  s.event_rates = j.at("event_rates").get<std::vector<double>>();
  s.object_rates = j.at("object_rates").get<std::vector<double>>();
  s.noise_sigma = j.at("noise_sigma");
  s.grid_rows = j.at("grid_rows");
  s.grid_cols = j.at("grid_cols");
  s.num_images = j.at("num_images");
  s.image_h = j.at("image_h");
  s.image_w = j.at("image_w");
  s.image_channels = j.at("image_channels");
  s.event_threshold = j.at("event_threshold");
  s.object_threshold = j.at("object_threshold");
  s.template_seed = j.at("template_seed");
  return s;
}

void write_f64(std::ostream& os, std::span<const double> values) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  os.write(reinterpret_cast<const char*>(values.data()),
           static_cast<std::streamsize>(values.size() * sizeof(double)));
}

std::vector<double> read_f64(std::istream& is, std::size_t count) {
  std::vector<double> v(count);
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!is) throw ConfigError("dataset file truncated");
  return v;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  nlohmann::json manifest = {
      {"format", kFormat},  {"version", kVersion}, {"n", ds.samples.size()},
      {"seed", ds.seed},    {"spec", spec_to_json(ds.spec)},
      {"train", ds.train},  {"test", ds.test},
      {"layout", {"scene", "event_soft", "object_soft", "event_label", "object_label", "audio", "images"}}};
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write dataset file " + path.string());
  os << manifest.dump() << '\n';
  for (const auto& s : ds.samples) {
    const double scene = static_cast<double>(s.scene);
    write_f64(os, std::span<const double>(&scene, 1));
    write_f64(os, s.event_soft);
    write_f64(os, s.object_soft);
    write_f64(os, s.event_label);
    write_f64(os, s.object_label);
    write_f64(os, s.audio);
    write_f64(os, s.images);
  }
  if (!os) throw ConfigError("failed writing dataset file " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open dataset file " + path.string());
  std::string line;
  std::getline(is, line);
  const auto manifest = nlohmann::json::parse(line);
  if (manifest.at("format") != kFormat || manifest.at("version") != kVersion)
    throw ConfigError("unsupported dataset file " + path.string());
  Dataset ds;
  ds.spec = spec_from_json(manifest.at("spec"));
  ds.spec.validate();
  ds.seed = manifest.at("seed");
  ds.train = manifest.at("train").get<std::vector<std::size_t>>();
  ds.test = manifest.at("test").get<std::vector<std::size_t>>();
  const std::size_t n = manifest.at("n");
  const auto& sp = ds.spec;
  ds.samples.resize(n);
  for (auto& s : ds.samples) {
    s.scene = static_cast<std::size_t>(read_f64(is, 1)[0]);
    if (s.scene >= sp.num_scenes) throw ConfigError("dataset file: scene index out of range");
    s.scene_label.assign(sp.num_scenes, 0.0);
    s.scene_label[s.scene] = 1.0;
    s.event_soft = read_f64(is, sp.num_events);
    s.object_soft = read_f64(is, sp.num_objects);
    s.event_label = read_f64(is, sp.num_events);
    s.object_label = read_f64(is, sp.num_objects);
    s.audio = read_f64(is, sp.audio_size());
    s.images = read_f64(is, sp.image_size() * sp.num_images);
  }
  return ds;
}

}  // namespace avsc::data
