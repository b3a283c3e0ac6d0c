#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace csfusion {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidStateError : Error {
  using Error::Error;
};
struct InvalidIntervalError : Error {
  using Error::Error;
};
struct InvalidPriorError : Error {
  using Error::Error;
};
struct InvalidConfigError : Error {
  using Error::Error;
};
struct WarmupIncompleteError : Error {
  using Error::Error;
};
struct DegenerateClusterError : Error {
  using Error::Error;
};
struct DegenerateDwellError : Error {
  using Error::Error;
};
struct InputFormatError : Error {
  using Error::Error;
};

/// Raised when a hazard set cannot be reached from one or more transient
/// modes; `modes` lists the offenders.
struct UnreachableHazardError : Error {
  UnreachableHazardError(const std::string& msg, std::vector<int> unreachable)
      : Error(msg), modes(std::move(unreachable)) {}
  std::vector<int> modes;
};

}  // namespace csfusion
