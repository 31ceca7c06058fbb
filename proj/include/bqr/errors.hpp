#pragma once

#include <stdexcept>
#include <string>

namespace bqr {

// Raised when array shapes disagree (design vs. coefficients, prior vs. data, ...).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised for malformed or out-of-domain input data.
class DataError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class RankDeficientError : public std::runtime_error {
 public:
  RankDeficientError(const std::string& what, int column)
      : std::runtime_error(what), column_(column) {}
  // Index (in the original design) of the first column found to be dependent.
  int column() const noexcept { return column_; }

 private:
  int column_;
};

// Diagnostic failures on draws (too short, zero variance).
class ChainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bqr
