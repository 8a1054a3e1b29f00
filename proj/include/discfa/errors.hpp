#pragma once

#include <stdexcept>
#include <string>

namespace discfa {

// Error taxonomy shared by the library and the CLI exit-code contract.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Invalid distribution or model parameter values (theta <= 0, p outside (0,1), ...).
class DomainError : public Error {
public:
  using Error::Error;
};

// Structural misuse: malformed partitions, group/parameter shape mismatches.
class StructuralError : public Error {
public:
  using Error::Error;
};

// Bad input data: negative counts, values above a truncation bound, missing cells.
class DataError : public Error {
public:
  using Error::Error;
};

// Numerical failure with a diagnostic, e.g. an underflowing normalizing constant.
class NumericError : public Error {
public:
  using Error::Error;
};

// Invalid run configuration (CLI flags, SimSpec files).
class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace discfa
