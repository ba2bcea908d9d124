#pragma once

#include <stdexcept>
#include <string>

namespace pgm {

/// Thrown when a matrix expected to be symmetric positive definite fails its
/// Cholesky factorization. Carries the matrix dimension and the index of the
/// first non-positive pivot so callers can log exactly what went wrong.
class CholeskyFailure : public std::runtime_error {
 public:
  CholeskyFailure(int dim, int pivot)
      : std::runtime_error("Cholesky factorization failed: dim=" + std::to_string(dim) +
                           ", pivot index " + std::to_string(pivot) + " is not positive"),
        dim_(dim),
        pivot_(pivot) {}

  [[nodiscard]] int dim() const noexcept { return dim_; }
  [[nodiscard]] int pivot() const noexcept { return pivot_; }

 private:
  int dim_;
  int pivot_;
};

/// Thrown when vector/matrix dimensions of the arguments disagree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown on invalid argument values (empty index sets, out-of-range counts, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown by the config parser; message carries file:line and the offending
/// section.key so the CLI can print actionable diagnostics.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown on file-system failures; message carries the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pgm
