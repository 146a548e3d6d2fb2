#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "avsc/config.hpp"
#include "avsc/model.hpp"

namespace avsc::harness {

struct NamedTensor {
  std::string name;
  num::Shape shape;
  std::vector<double> values;
};

struct Checkpoint {
  RunConfig config;
  std::size_t epoch = 0;
  std::vector<NamedTensor> tensors;  // parameter order of the model
};

Checkpoint snapshot(const SceneModel& model, std::size_t epoch);

/// Copies checkpoint values into `model`. Names and shapes must match the
/// model's parameters one for one, otherwise ConfigError.
void restore(const Checkpoint& ckpt, SceneModel& model);

/// Rebuilds a model from the stored config and loads its values.
SceneModel model_from(const Checkpoint& ckpt);

/// JSON manifest: config, epoch, and {name, shape, values} per tensor. Values
/// are written with round-trip precision, so load(save(x)) is bit-exact.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace avsc::harness
