#pragma once

#include <stdexcept>
#include <string>

namespace sdd {

/// Invalid input while building a value type (segments, maps, operators).
class ConstructionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the domain of an operation (e.g. theta outside [-r, 0]).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Numerical failure inside an evaluation or a time step.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double time) : std::runtime_error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Picard iteration did not converge. Carries the observed contraction factor.
class PicardDivergence : public SolverError {
 public:
  PicardDivergence(const std::string& what, double time, double contraction)
      : SolverError(what, time), contraction_(contraction) {}
  double contraction_estimate() const noexcept { return contraction_; }

 private:
  double contraction_;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sdd
