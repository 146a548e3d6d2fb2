#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

#include "avsc/checkpoint.hpp"
#include "avsc/config.hpp"
#include "avsc/metrics.hpp"
#include "avsc/model.hpp"

namespace avsc::harness {

enum class Split { kTrain, kTest, kAll };

Split parse_split(const std::string& text);  // train | test | all

struct EpochLog {
  std::size_t epoch = 0;  // 0 = initialisation
  Metrics train, test;
  // Mean per-sample loss components over the epoch (L_e, L_o, L_e2o, L_o2e,
  // L_s) and the weighted total; NaN for epoch 0, which does no training.
  std::array<double, 5> losses{};
  double total = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> history;  // epochs + 1 entries
  Metrics test;                   // test metrics after the last epoch
  Checkpoint checkpoint;
};

/// Training metrics for epochs >= 1 are accumulated from the forward passes
/// made while training through that epoch; test metrics come from a separate
/// evaluation after the epoch's last update.
///
/// `dataset` may be supplied to share one generated dataset across runs; it
/// must match cfg.data. Throws DivergenceError on a non-finite loss.
TrainResult train(const RunConfig& cfg, const data::Dataset* dataset = nullptr,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

/// Scene metrics of `model` on a split; parameters are not touched.
Metrics evaluate(const SceneModel& model, const data::Dataset& dataset, Split split);

/// Rebuilds the checkpoint's model; the dataset (generated from the stored
/// config when absent) must have matching dims, otherwise ConfigError.
Metrics evaluate(const Checkpoint& ckpt, Split split, const data::Dataset* dataset = nullptr);

}  // namespace avsc::harness
