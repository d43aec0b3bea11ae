#pragma once

#include <stdexcept>
#include <string>

namespace aladin {

/// Base class for every error raised by the library.
class AladinError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An oracle returned a non-finite value or a result of the wrong shape.
class OracleError : public AladinError {
 public:
  using AladinError::AladinError;
};

class ShapeError : public AladinError {
 public:
  using AladinError::AladinError;
};

class DomainError : public AladinError {
 public:
  using AladinError::AladinError;
};

class NumericalError : public AladinError {
 public:
  using AladinError::AladinError;
};

/// Backtracking on the KKT merit shrank the step below the configured floor.
class SolveStalled : public AladinError {
 public:
  using AladinError::AladinError;
};

class NotPositiveDefinite : public AladinError {
 public:
  using AladinError::AladinError;
};

/// C H^{-1} C^T is singular: the local constraint Jacobian lost full row rank.
class RankDeficientConstraints : public AladinError {
 public:
  using AladinError::AladinError;
};

/// The coordination system (Schur complement or full KKT matrix) is singular.
class CoordinationSingular : public AladinError {
 public:
  CoordinationSingular(const std::string& what, double rcond)
      : AladinError(what), rcond_(rcond) {}
  double rcond() const noexcept { return rcond_; }

 private:
  double rcond_;
};

class MeasurementSingular : public AladinError {
 public:
  using AladinError::AladinError;
};

class LayoutError : public AladinError {
 public:
  using AladinError::AladinError;
};

class ConfigError : public AladinError {
 public:
  using AladinError::AladinError;
};

}  // namespace aladin
