#pragma once

#include <stdexcept>
#include <string>

namespace probfem {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A perturbed mesh stayed invalid after the allowed number of resampling attempts.
class PerturbationError : public Error {
 public:
  using Error::Error;
};

class TriangulationError : public Error {
 public:
  using Error::Error;
};

/// The assembled system has a rigid-body mode or is otherwise singular.
class SingularSystemError : public Error {
 public:
  using Error::Error;
};

/// Cholesky factorization met a non-positive pivot.
class IndefiniteMatrixError : public Error {
 public:
  using Error::Error;
};

class OutsideDomainError : public Error {
 public:
  using Error::Error;
};

/// Coarse and fine discretizations are not nested or observe different points.
class NestingError : public Error {
 public:
  using Error::Error;
};

/// No usable likelihood value could be produced (e.g. every pseudomarginal replica failed).
class LikelihoodEvaluationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace probfem
