#pragma once

#include <stdexcept>
#include <string>

namespace rmss {

// Input data is malformed or unusable (bad CSV cell, zero-spread column,
// dimension mismatch between model and data).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// A numeric routine failed (factorization of an indefinite matrix,
// non-finite values produced mid-computation).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace rmss
