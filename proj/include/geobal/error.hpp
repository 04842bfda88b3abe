#pragma once

#include <stdexcept>
#include <string>

namespace geobal {

/// Domain failure: infeasible reference run, missing parameters, hash mismatch.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input supplied by the caller: unreadable file, bad state string,
/// unknown manifest key. The CLI maps these to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace geobal
