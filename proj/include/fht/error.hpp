#pragma once

#include <stdexcept>
#include <string>

namespace fht {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Zero vector passed where a quantum state is required.
class DegenerateStateError : public Error {
 public:
  DegenerateStateError() : Error("degenerate state") {}
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid model, parameter set or run configuration. `key()` holds the
/// dotted path of the offending entry when one is known.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what, std::string key = {})
      : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// NaN/Inf encountered while integrating.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double time)
      : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Multi-start search for the minimal total dispersion hit its iteration cap.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double best)
      : Error(what), best_(best) {}
  double best_value() const noexcept { return best_; }

 private:
  double best_;
};

}  // namespace fht
