#pragma once

#include <stdexcept>
#include <string>

namespace sbssl {

/// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid configuration (bad hyperparameters, unknown config keys,
/// architecture mismatches). CLI exit code 2.
struct ConfigError : Error {
  using Error::Error;
};

/// Problems with input data or files on disk. CLI exit code 3.
struct DataError : Error {
  using Error::Error;
};

/// Non-finite values where finite ones are required. CLI exit code 4.
struct NumericError : Error {
  using Error::Error;
};

/// Tensor shape contract violations.
struct ShapeError : Error {
  using Error::Error;
};

/// Array-container parse failures, with a distinct code per failure mode.
struct NpyError : DataError {
  enum class Code {
    io,
    bad_magic,
    bad_version,
    bad_header,
    fortran_order,
    unsupported_dtype,
    bad_rank,
    truncated,
    non_finite,
  };
  NpyError(Code c, const std::string& msg) : DataError(msg), code(c) {}
  Code code;
};

}  // namespace sbssl
