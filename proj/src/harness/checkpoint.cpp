#include "avsc/checkpoint.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "avsc/errors.hpp"

namespace avsc::harness {

using nlohmann::json;

Checkpoint snapshot(const SceneModel& model, std::size_t epoch) {
  Checkpoint c;
  c.config = model.config();
  c.epoch = epoch;
  for (const auto& [name, t] : model.params().entries()) c.tensors.push_back({name, t.shape(), t.to_vector()});
  return c;
}

void restore(const Checkpoint& ckpt, SceneModel& model) {
  const auto& entries = model.params().entries();
  if (entries.size() != ckpt.tensors.size())
    throw ConfigError("checkpoint has " + std::to_string(ckpt.tensors.size()) +
                      " tensors, model expects " + std::to_string(entries.size()));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& [name, t] = entries[i];
    const auto& src = ckpt.tensors[i];
    if (src.name != name || src.shape != t.shape() || src.values.size() != t.numel())
      throw ConfigError("checkpoint tensor '" + src.name + "' " + num::to_string(src.shape) +
                        " does not match model tensor '" + name + "' " + num::to_string(t.shape()));
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    num::Tensor t = entries[i].second;
    std::copy(ckpt.tensors[i].values.begin(), ckpt.tensors[i].values.end(), t.mutable_data().begin());
  }
}

SceneModel model_from(const Checkpoint& ckpt) {
  SceneModel m(ckpt.config);
  restore(ckpt, m);
  return m;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  json j;
  j["format"] = "avsc-checkpoint-1";
  j["config"] = to_json(ckpt.config);
  j["epoch"] = ckpt.epoch;
  json tensors = json::array();
  for (const auto& t : ckpt.tensors) tensors.push_back({{"name", t.name}, {"shape", t.shape}, {"values", t.values}});
  j["tensors"] = std::move(tensors);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write checkpoint " + path.string());
  out << j.dump() << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  Checkpoint c;
  try {
    json j = json::parse(in);
    if (j.value("format", "") != "avsc-checkpoint-1")
      throw ConfigError("not a checkpoint file: " + path.string());
    c.config = from_json(j.at("config"));
    c.epoch = j.at("epoch").get<std::size_t>();
    for (const auto& t : j.at("tensors"))
      c.tensors.push_back({t.at("name").get<std::string>(), t.at("shape").get<num::Shape>(),
                           t.at("values").get<std::vector<double>>()});
  } catch (const json::exception& e) {
    throw ConfigError("checkpoint " + path.string() + ": " + e.what());
  }
  for (const auto& t : c.tensors)
    if (num::numel_of(t.shape) != t.values.size())
      throw ConfigError("checkpoint tensor '" + t.name + "': value count does not match shape");
  return c;
}

}  // namespace avsc::harness
