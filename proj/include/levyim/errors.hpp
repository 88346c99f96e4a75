#pragma once

#include <stdexcept>
#include <string>

namespace levyim {

/// Argument outside the mathematical domain of an operation (alpha, p, sigma, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A time or value fell outside the sampled horizon of a path.
/// `needed` is how far the horizon would have to be extended (0 if unknown).
class RangeError : public std::out_of_range {
 public:
  explicit RangeError(const std::string& what, double needed = 0.0)
      : std::out_of_range(what), needed_(needed) {}
  double needed_extension() const noexcept { return needed_; }

 private:
  double needed_;
};

/// Caller broke a precondition that is not a domain issue (frame mismatch, backward Q flow).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Invalid configuration value; `field` is the dotted path of the offending key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// The spectral gap condition does not hold for the requested (L, mu).
class GapViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Divergence, non-contraction or an iteration budget ran out.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace levyim
