#pragma once

#include <stdexcept>
#include <string>

namespace fxnet {

// Base of every library error. The CLI maps the three families below onto
// process exit codes (config 2, data 3, numerical 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

// market data
class MalformedRow : public DataError {
 public:
  MalformedRow(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DuplicateQuote : public DataError {
 public:
  using DataError::DataError;
};
class EmptyFile : public DataError {
 public:
  using DataError::DataError;
};
class CrossedMarket : public DataError {
 public:
  using DataError::DataError;
};
class NonMonotoneEntry : public DataError {
 public:
  using DataError::DataError;
};
class NoOverlap : public DataError {
 public:
  using DataError::DataError;
};

// implied variance
class NonMonotoneStrikes : public NumericalError {
 public:
  using NumericalError::NumericalError;
};
class NoConvergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// estimation
class SingularDesign : public NumericalError {
 public:
  using NumericalError::NumericalError;
};
class RankDeficient : public NumericalError {
 public:
  using NumericalError::NumericalError;
};
class SingularMoments : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// strategies
class UniverseTooSmall : public DataError {
 public:
  using DataError::DataError;
};
class InsufficientHistory : public DataError {
 public:
  using DataError::DataError;
};
class MissingQuote : public DataError {
 public:
  using DataError::DataError;
};
class TooShort : public DataError {
 public:
  using DataError::DataError;
};
class LengthMismatch : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace fxnet
