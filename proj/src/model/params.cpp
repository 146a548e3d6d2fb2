#include "avsc/params.hpp"

#include "avsc/errors.hpp"

namespace avsc::model {

num::Tensor ParamSet::add_uniform(const std::string& name, num::Shape shape, double bound,
                                  std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> values(num::numel_of(shape));
  for (auto& v : values) v = dist(rng);
  return add(name, num::Tensor(std::move(shape), std::move(values), true));
}

num::Tensor ParamSet::add_zeros(const std::string& name, num::Shape shape) {
  return add(name, num::Tensor::zeros(std::move(shape), true));
}

num::Tensor ParamSet::add(const std::string& name, num::Tensor tensor) {
  if (find(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  entries_.emplace_back(name, tensor);
  return tensor;
}

const num::Tensor* ParamSet::find(const std::string& name) const {
  for (const auto& [n, t] : entries_)
    if (n == name) return &t;
  return nullptr;
}

num::Tensor ParamSet::get(const std::string& name) const {
  if (const auto* t = find(name)) return *t;
  throw ConfigError("unknown parameter '" + name + "'");
}

std::vector<num::Tensor> ParamSet::tensors() const {
  std::vector<num::Tensor> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.second);
  return out;
}

std::vector<std::string> ParamSet::names() const {
  std::vector<std::string> out;
  for (const auto& e : entries_) out.push_back(e.first);
  return out;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second.numel();
  return n;
}

void ParamSet::zero_grad() {
  for (auto& e : entries_) e.second.zero_grad();
}

}  // namespace avsc::model
