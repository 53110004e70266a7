#pragma once

#include <stdexcept>
#include <string>

namespace fbflow {

// Two profiles live on incompatible grids (different cell widths).
class GridMismatchError : public std::invalid_argument {
public:
  explicit GridMismatchError(const std::string& msg) : std::invalid_argument(msg) {}
};

// A measure does not carry enough free density for the requested cut,
// i.e. it falls outside the admissible class for that cut depth.
class InsufficientDensityError : public std::domain_error {
public:
  explicit InsufficientDensityError(const std::string& msg) : std::domain_error(msg) {}
};

// An operation requiring an ordered pair (or equal masses) was called on
// inputs that violate the precondition.
class OrderPreconditionError : public std::invalid_argument {
public:
  explicit OrderPreconditionError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Solver/grid configuration is unusable (target grid too small, unstable
// mesh ratio, nonpositive step counts, ...).
class ConfigurationError : public std::invalid_argument {
public:
  explicit ConfigurationError(const std::string& msg) : std::invalid_argument(msg) {}
};

// An iterative refinement stopped at its level cap without reaching the
// requested tolerance; carries the gap that was actually achieved.
class ConvergenceFailure : public std::runtime_error {
public:
  ConvergenceFailure(const std::string& msg, double achieved, int levels)
      : std::runtime_error(msg), achieved_gap(achieved), levels_used(levels) {}
  double achieved_gap;
  int levels_used;
};

// A bracketing search exhausted its sampling range without a sign change.
class SearchFailure : public std::runtime_error {
public:
  explicit SearchFailure(const std::string& msg) : std::runtime_error(msg) {}
};

// A structural invariant that the library promises to maintain was found
// violated at runtime (always a bug or a broken input file).
class InvariantViolation : public std::runtime_error {
public:
  explicit InvariantViolation(const std::string& msg) : std::runtime_error(msg) {}
};

// A file could not be opened, read, parsed, or written.
class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fbflow
