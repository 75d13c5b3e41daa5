#pragma once

#include <stdexcept>
#include <string>

namespace dagfl {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnknownTransaction : Error {
  using Error::Error;
};

struct UnknownParent : Error {
  using Error::Error;
};

struct EmptyInput : Error {
  using Error::Error;
};

struct ArchitectureMismatch : Error {
  using Error::Error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct EmptyDataset : Error {
  using Error::Error;
};

struct InvalidPartition : Error {
  using Error::Error;
};

struct InvalidParameter : Error {
  using Error::Error;
};

struct InvalidClass : Error {
  using Error::Error;
};

struct NoRelevantSamples : Error {
  using Error::Error;
};

struct EmptyGraph : Error {
  using Error::Error;
};

struct NoEdges : Error {
  using Error::Error;
};

}  // namespace dagfl
