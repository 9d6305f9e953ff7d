#pragma once

#include <stdexcept>

namespace splinemetric {

/// Base class for all splinemetric errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument values (negative sd, unsupported order, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Malformed input files.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Non-finite or otherwise unusable data values.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Sampling grid violations (duplicates, out of range, too short).
class GridError : public Error {
 public:
  using Error::Error;
};

/// Size mismatches between vectors, matrices and grids.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Singular operator system (grid incompatible with the boundary conditions).
class SingularSystemError : public Error {
 public:
  using Error::Error;
};

/// Factorization failures that survive the jitter policy.
class ConditioningError : public Error {
 public:
  using Error::Error;
};

/// Hat-matrix diagonal too close to one for the leave-one-out criterion.
class DegenerateSmootherError : public Error {
 public:
  using Error::Error;
};

/// Run-configuration validation failures (all messages collected into one).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace splinemetric
