#pragma once

#include <stdexcept>
#include <string>

namespace polyattack {

// Precondition violations on vector/matrix shapes.
class DimensionMismatch : public std::invalid_argument {
 public:
  explicit DimensionMismatch(const std::string& what) : std::invalid_argument(what) {}
};

// Metric inputs of unequal length.
class LengthMismatch : public std::invalid_argument {
 public:
  explicit LengthMismatch(const std::string& what) : std::invalid_argument(what) {}
};

// Training data where one class is absent.
class DegenerateLabels : public std::runtime_error {
 public:
  explicit DegenerateLabels(const std::string& what) : std::runtime_error(what) {}
};

// Attribution shift on an all-zero attribution vector.
class ZeroVector : public std::runtime_error {
 public:
  explicit ZeroVector(const std::string& what) : std::runtime_error(what) {}
};

// Anything wrong with on-disk data files (IDX parsing, missing files).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};
class BadMagic : public DataError {
 public:
  explicit BadMagic(const std::string& what) : DataError(what) {}
};
class TruncatedFile : public DataError {
 public:
  explicit TruncatedFile(const std::string& what) : DataError(what) {}
};
class CountMismatch : public DataError {
 public:
  explicit CountMismatch(const std::string& what) : DataError(what) {}
};

// Run configuration problems (unknown keys, invariant violations).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Internal solver numerics gone bad (a returned "optimal" point failed the
// independent feasibility re-check).  Callers map this to a solver-failure
// status; it should never fire on well-posed inputs.
class SolverNumericsError : public std::runtime_error {
 public:
  explicit SolverNumericsError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace polyattack
