#pragma once

#include <stdexcept>
#include <string>

namespace ed3 {

/// Raised when an argument violates an operation's precondition or a type invariant.
class InvalidArgument : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

/// Base for iterative solvers that hit their iteration cap. Derived types carry the best iterate.
class ConvergenceError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// File could not be read, written or parsed.
class IoError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

}  // namespace ed3
