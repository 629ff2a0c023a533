#pragma once

#include <stdexcept>
#include <string>

namespace divkernel {

/// Raised when an argument or configuration violates a documented precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative procedure or a redraw loop gives up.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}
}  // namespace detail

}  // namespace divkernel
