#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mion {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidDimension : public Error {
 public:
  using Error::Error;
};

/// An index or table lookup fell outside the tabulated range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Input violated a documented precondition (negative rate, unnormalized
/// distribution, non-Hermitian matrix, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// The Fock truncation cannot hold the state within the tail budget.
class TruncationError : public Error {
 public:
  TruncationError(const std::string& what, std::size_t required_dim)
      : Error(what), required_dim_(required_dim) {}

  /// Smallest Fock dimension known to satisfy the budget (0 when unknown).
  std::size_t required_dim() const noexcept { return required_dim_; }

 private:
  std::size_t required_dim_;
};

/// Adaptive step size collapsed below the representable resolution.
class StiffnessError : public Error {
 public:
  StiffnessError(const std::string& what, double time_reached)
      : Error(what), time_reached_(time_reached) {}

  double time_reached() const noexcept { return time_reached_; }

 private:
  double time_reached_;
};

}  // namespace mion
