#pragma once

#include <stdexcept>
#include <string>

namespace wdht {

// Error hierarchy mirrored by the CLI exit codes:
// ConfigError -> 1, DataError -> 2, NumericError -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration: unknown keys, invalid flag values, impossible shapes.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Bad input data: malformed files, inconsistent sample counts, empty corpora.
class DataError : public Error {
 public:
  using Error::Error;
};

// Numeric failure: non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace wdht
