#pragma once

#include <stdexcept>
#include <string>

namespace trajkit {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke an operation's precondition (wrong dimensions, wrong status,
// wrong signature for an analysis, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace trajkit
