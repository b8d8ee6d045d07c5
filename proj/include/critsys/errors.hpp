#pragma once

#include <stdexcept>
#include <string>

namespace critsys {

// Base of everything the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the domain where a formula is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

// lambda outside (-lambda_1(Omega), 0).
class AdmissibilityError : public DomainError {
 public:
  using DomainError::DomainError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// A scan found no sign change; carries the scan resolution so callers can refine.
class BracketError : public Error {
 public:
  BracketError(const std::string& what, int scan_points)
      : Error(what), scan_points_(scan_points) {}
  int scan_points() const { return scan_points_; }

 private:
  int scan_points_;
};

class ContinuationError : public Error {
 public:
  ContinuationError(const std::string& what, double last_good_beta)
      : Error(what), last_good_beta_(last_good_beta) {}
  double last_good_beta() const { return last_good_beta_; }

 private:
  double last_good_beta_;
};

class NoClosedFormError : public Error {
 public:
  using Error::Error;
};

// Pair too overlapped to be scaled onto the two-constraint Nehari set.
class NoProjectionError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, int iterations, double residual)
      : Error(what), iterations_(iterations), residual_(residual) {}
  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  int iterations_;
  double residual_;
};

}  // namespace critsys
