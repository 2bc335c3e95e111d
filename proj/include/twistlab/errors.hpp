#pragma once

#include <stdexcept>
#include <string>

namespace twistlab {

// Base of everything the library throws. The CLI maps InvalidArgument to
// exit code 2 and every other Error to exit code 1.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error {
  using Error::Error;
};

struct InvalidGeneratingFunction : Error {
  using Error::Error;
};

struct RootNotBracketed : Error {
  using Error::Error;
};

struct NoConvergence : Error {
  using Error::Error;
};

struct NotCritical : Error {
  using Error::Error;
};

struct RationalTarget : Error {
  using Error::Error;
};

struct GraphViolation : Error {
  using Error::Error;
};

struct DegenerateSeries : Error {
  using Error::Error;
};

}  // namespace twistlab
