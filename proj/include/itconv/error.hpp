#pragma once

// Exception hierarchy shared by every itconv module. Each failure mode named
// in the public contracts has its own type so callers can catch precisely.

#include <stdexcept>
#include <string>

namespace itconv {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

// Cholesky pivot <= 0.
class NotPositiveDefinite : public Error {
 public:
  NotPositiveDefinite(std::size_t pivot, double value)
      : Error("matrix is not positive definite (pivot " + std::to_string(pivot) +
              " = " + std::to_string(value) + ")"),
        pivot_(pivot),
        value_(value) {}

  std::size_t pivot() const noexcept { return pivot_; }
  double value() const noexcept { return value_; }

 private:
  std::size_t pivot_;
  double value_;
};

class TooFewRows : public Error {
 public:
  using Error::Error;
};

class DegenerateInput : public Error {
 public:
  using Error::Error;
};

class TooFewObserved : public Error {
 public:
  using Error::Error;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
};

class DegenerateResidual : public Error {
 public:
  using Error::Error;
};

class SingularDesign : public Error {
 public:
  using Error::Error;
};

// Engine failure annotated with where in the run it happened.
class ImputationError : public Error {
 public:
  ImputationError(const std::string& what, std::size_t chain, int iteration,
                  std::size_t variable)
      : Error("chain " + std::to_string(chain) + ", iteration " +
              std::to_string(iteration) + ", variable " +
              std::to_string(variable) + ": " + what),
        chain_(chain),
        iteration_(iteration),
        variable_(variable) {}

  std::size_t chain() const noexcept { return chain_; }
  int iteration() const noexcept { return iteration_; }
  std::size_t variable() const noexcept { return variable_; }

 private:
  std::size_t chain_;
  int iteration_;
  std::size_t variable_;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace itconv
