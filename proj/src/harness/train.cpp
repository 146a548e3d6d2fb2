#include "avsc/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "avsc/errors.hpp"
#include "avsc/ops.hpp"
#include "avsc/optim.hpp"

namespace avsc::harness {

Split parse_split(const std::string& text) {
  if (text == "train") return Split::kTrain;
  if (text == "test") return Split::kTest;
  if (text == "all") return Split::kAll;
  throw ConfigError("unknown split '" + text + "' (expected train, test or all)");
}

namespace {

void check_dims(const RunConfig& cfg, const data::Dataset& ds) {
  const auto& s = ds.spec;
  const auto& d = cfg.data;
  if (s.num_scenes != d.num_scenes || s.num_events != d.num_events || s.num_objects != d.num_objects ||
      s.grid_rows != d.grid_rows || s.grid_cols != d.grid_cols || s.num_images != d.num_images ||
      s.image_h != d.image_h || s.image_w != d.image_w || s.image_channels != d.image_channels)
    throw ConfigError("dataset dims (C_s=" + std::to_string(s.num_scenes) +
                      ", C_e=" + std::to_string(s.num_events) + ", C_o=" + std::to_string(s.num_objects) +
                      ") do not match the model config (C_s=" + std::to_string(d.num_scenes) +
                      ", C_e=" + std::to_string(d.num_events) + ", C_o=" + std::to_string(d.num_objects) + ")");
}

std::vector<std::size_t> split_indices(const data::Dataset& ds, Split split) {
  if (split == Split::kTrain) return ds.train;
  if (split == Split::kTest) return ds.test;
  std::vector<std::size_t> all(ds.samples.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return all;
}

Metrics evaluate_indices(const SceneModel& model, const data::Dataset& ds,
                         const std::vector<std::size_t>& idx) {
  std::vector<std::vector<double>> probs;
  std::vector<std::size_t> labels;
  probs.reserve(idx.size());
  for (std::size_t i : idx) {
    probs.push_back(model.predict(ds.samples[i]));
    labels.push_back(ds.samples[i].scene);
  }
  return compute_metrics(probs, labels, model.config().data.num_scenes, model.config().accuracy);
}

std::mt19937_64 shuffle_stream(std::uint64_t seed, std::uint64_t epoch) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), 0x51u};
  return std::mt19937_64(seq);
}

}  // namespace

Metrics evaluate(const SceneModel& model, const data::Dataset& dataset, Split split) {
  check_dims(model.config(), dataset);
  const auto idx = split_indices(dataset, split);
  if (idx.empty()) throw ConfigError("evaluate: split is empty");
  return evaluate_indices(model, dataset, idx);
}

Metrics evaluate(const Checkpoint& ckpt, Split split, const data::Dataset* dataset) {
  const SceneModel model = model_from(ckpt);
  if (dataset) return evaluate(model, *dataset, split);
  const data::Dataset ds = build_dataset(ckpt.config);
  return evaluate(model, ds, split);
}

TrainResult train(const RunConfig& cfg, const data::Dataset* dataset,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  cfg.validate();
  data::Dataset owned;
  if (!dataset) {
    owned = build_dataset(cfg);
    dataset = &owned;
  }
  check_dims(cfg, *dataset);
  const auto& ds = *dataset;
  if (ds.train.empty() || ds.test.empty()) throw ConfigError("train: empty train or test split");

  SceneModel model(cfg);
  auto params = model.params().tensors();
  AdamWState state;
  TrainResult result;

  EpochLog init;
  init.train = evaluate_indices(model, ds, ds.train);
  init.test = evaluate_indices(model, ds, ds.test);
  init.losses.fill(std::numeric_limits<double>::quiet_NaN());
  init.total = std::numeric_limits<double>::quiet_NaN();
  result.history.push_back(init);
  if (on_epoch) on_epoch(init);

  const std::size_t C_s = cfg.data.num_scenes;
  std::vector<std::size_t> order = ds.train;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::sort(order.begin(), order.end());
    auto rng = shuffle_stream(cfg.seed, epoch);
    std::shuffle(order.begin(), order.end(), rng);

    EpochLog log;
    log.epoch = epoch;
    std::vector<std::vector<double>> probs;
    std::vector<std::size_t> labels;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double inv_b = 1.0 / static_cast<double>(end - start);
      model.params().zero_grad();
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t i = order[b];
        auto stream = rkm_stream(cfg.contrastive.rng_seed, epoch, i);
        SampleOutputs out;
        try {
          out = model.forward(ds.samples[i], true, &stream);
        } catch (const DomainError& e) {
          throw DivergenceError(std::string("epoch ") + std::to_string(epoch) + ": " + e.what(),
                                static_cast<int>(epoch) - 1);
        }
        const double total = out.losses.total.item();
        if (!std::isfinite(total))
          throw DivergenceError("non-finite loss in epoch " + std::to_string(epoch), static_cast<int>(epoch) - 1);
        num::backward(num::scale(out.losses.total, inv_b));
        const auto comps = out.losses.components();
        for (std::size_t c = 0; c < 5; ++c) log.losses[c] += comps[c];
        log.total += total;
        probs.push_back(out.scene.probs.to_vector());
        labels.push_back(ds.samples[i].scene);
      }
      try {
        adamw_step(params, state, cfg.optimizer);
      } catch (const DomainError&) {
        throw DivergenceError("non-finite update in epoch " + std::to_string(epoch), static_cast<int>(epoch) - 1);
      }
      for (const auto& p : params)
        for (double v : p.data())
          if (!std::isfinite(v))
            throw DivergenceError("non-finite parameter after an update in epoch " + std::to_string(epoch),
                                  static_cast<int>(epoch) - 1);
    }
    const double n = static_cast<double>(order.size());
    for (double& l : log.losses) l /= n;
    log.total /= n;
    log.train = compute_metrics(probs, labels, C_s, cfg.accuracy);
    log.test = evaluate_indices(model, ds, ds.test);
    result.history.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  result.test = result.history.back().test;
  result.checkpoint = snapshot(model, cfg.epochs);
  return result;
}

}  // namespace avsc::harness
