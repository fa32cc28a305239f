#pragma once

#include <stdexcept>
#include <string>

namespace fragmentor {

/// Invalid input: malformed data, violated preconditions, exceeded caps.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A mathematical invariant that should hold on every valid input did not.
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace fragmentor
