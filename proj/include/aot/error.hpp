#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aot {

enum class ErrorKind {
  InvalidModel,
  InvalidArgument,
  ZeroLikelihood,
  DegenerateWeights,
  TagMismatch,
  NothingToFlip,
  MissingAssignment,
  BudgetExceeded,
  MissingVmax,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` distinguishes the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace aot
