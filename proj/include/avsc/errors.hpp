#pragma once

#include <stdexcept>
#include <string>

namespace avsc {

/// Tensor shapes do not agree for the requested operation.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation (e.g. log of 0).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A call violated an API precondition (non-scalar loss, repeated backward, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Invalid configuration value, checked before any work starts.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, int last_finite_epoch)
      : std::runtime_error(what), last_finite_epoch_(last_finite_epoch) {}
  int last_finite_epoch() const noexcept { return last_finite_epoch_; }

 private:
  int last_finite_epoch_;
};

}  // namespace avsc
