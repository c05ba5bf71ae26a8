#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace qlsd {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public DomainError {
 public:
  using DomainError::DomainError;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

// Caller passed the wrong combination of optional arguments.
class ContractError : public Error {
 public:
  using Error::Error;
};

class CorruptionError : public Error {
 public:
  using Error::Error;
};

class StateError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  explicit DivergenceError(std::int64_t iteration)
      : Error("chain diverged at iteration " + std::to_string(iteration) +
              " (step size too large?)"),
        iteration_(iteration) {}
  std::int64_t iteration() const { return iteration_; }

 private:
  std::int64_t iteration_;
};

class OptimizationError : public Error {
 public:
  OptimizationError(const std::string& what, double grad_norm)
      : Error(what + " (final gradient norm " + std::to_string(grad_norm) + ")"),
        grad_norm_(grad_norm) {}
  double grad_norm() const { return grad_norm_; }

 private:
  double grad_norm_;
};

}  // namespace qlsd
