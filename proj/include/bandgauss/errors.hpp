#pragma once

#include <stdexcept>
#include <string>

namespace bandgauss {

/// Argument outside the mathematical domain of an operation (negative
/// frequency, r < 0, beta <= 0, kappa <= 0, ...).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Bad configuration or command usage; `field()` names the offending key.
class UsageError : public std::invalid_argument {
public:
  UsageError(std::string field, const std::string& what)
      : std::invalid_argument(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

/// The state does not have the symmetric two-mode block form the channel
/// formulas are specialized to.
class UnsupportedStateError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Quadrature did not converge, an eigen-solve failed, or a radicand that
/// should be non-negative came out clearly negative.
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace bandgauss
