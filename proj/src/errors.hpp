// errors.hpp -- shared error types.
//
// Budget exhaustion is always loud: the pipeline aborts rather than ever
// degrading a verdict silently.

#pragma once

#include <stdexcept>
#include <string>

namespace hopda {

// Structural / semantic problem with an input (bad file, rank violation,
// dangling reference...).  Maps to CLI exit status 1.
struct InputError : std::runtime_error {
  explicit InputError(const std::string& m) : std::runtime_error(m) {}
};

// An explicit resource budget (saturation states, annotation cap,
// enumeration nodes) was exhausted.  Maps to CLI exit status 2.
struct BudgetError : std::runtime_error {
  std::string where;
  BudgetError(std::string where_, const std::string& m)
      : std::runtime_error(m), where(std::move(where_)) {}
};

}  // namespace hopda
