#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "avsc/tensor.hpp"

namespace avsc::model {

/// Ordered, named collection of trainable leaf tensors. Order is insertion
/// order and is part of the checkpoint format.
class ParamSet {
 public:
  /// Uniform init in [-bound, bound].
  num::Tensor add_uniform(const std::string& name, num::Shape shape, double bound,
                          std::mt19937_64& rng);
  num::Tensor add_zeros(const std::string& name, num::Shape shape);
  /// Registers an existing leaf tensor.
  num::Tensor add(const std::string& name, num::Tensor tensor);

  const std::vector<std::pair<std::string, num::Tensor>>& entries() const { return entries_; }
  const num::Tensor* find(const std::string& name) const;
  num::Tensor get(const std::string& name) const;
  std::vector<num::Tensor> tensors() const;
  std::vector<std::string> names() const;
  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;

  void zero_grad();

 private:
  std::vector<std::pair<std::string, num::Tensor>> entries_;
};

}  // namespace avsc::model
