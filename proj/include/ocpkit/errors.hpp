#pragma once

#include <stdexcept>
#include <string>

namespace ocpkit {

/// Raised when a problem function produces a non-finite value or cannot be
/// evaluated at the requested point. Carries whatever context the caller had.
class EvaluationError : public std::runtime_error {
public:
  explicit EvaluationError(const std::string& what) : std::runtime_error(what) {}
};

/// Division by a kernel value whose real part is exactly zero.
class SingularEvaluation : public EvaluationError {
public:
  SingularEvaluation() : EvaluationError("division by kernel value with zero real part") {}
};

class InvalidDegree : public std::invalid_argument {
public:
  explicit InvalidDegree(const std::string& what) : std::invalid_argument(what) {}
};

class DegenerateInterval : public std::invalid_argument {
public:
  explicit DegenerateInterval(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace ocpkit
