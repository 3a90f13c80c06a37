#pragma once

#include <stdexcept>
#include <string>

namespace qss {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoPositiveRoot : Error {
  using Error::Error;
};
struct InvalidConfig : Error {
  using Error::Error;
};
struct StalledSimulation : Error {
  using Error::Error;
};
struct InvalidTopology : Error {
  using Error::Error;
};
struct NonFiniteState : Error {
  using Error::Error;
};
struct StepUnderflow : Error {
  using Error::Error;
};
struct GridMismatch : Error {
  using Error::Error;
};
struct ZeroReference : Error {
  using Error::Error;
};

}  // namespace qss
