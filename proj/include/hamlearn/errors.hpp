#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hamlearn {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid arguments or mismatched dimensions.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Point evaluated outside the basis domain under the strict policy.
class DomainError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

// Index set too large to enumerate.
class CapacityError : public Error {
 public:
  using Error::Error;
};

class EmptyDataError : public Error {
 public:
  using Error::Error;
};

// All eigenvalues of a least-squares system fell below the cutoff.
class DegenerateProblemError : public Error {
 public:
  using Error::Error;
};

class RankDeficiencyError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// A stage of the RK4 scheme produced a non-finite value.
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double time, std::size_t step_index)
      : Error(what), time_(time), step_index_(step_index) {}

  double time() const noexcept { return time_; }
  std::size_t step_index() const noexcept { return step_index_; }

 private:
  double time_;
  std::size_t step_index_;
};

}  // namespace hamlearn
