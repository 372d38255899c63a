#pragma once

#include <stdexcept>
#include <string>

namespace ausm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes that do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration values (patch divisibility, thresholds, ranges).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A caller broke a documented precondition of an operation.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// The identity pool has fewer free vectors than requested.
class PoolExhaustedError : public Error {
 public:
  PoolExhaustedError(std::size_t requested, std::size_t available)
      : Error("identity pool exhausted: requested " + std::to_string(requested) +
              " vectors but only " + std::to_string(available) + " are free"),
        requested_(requested),
        available_(available) {}

  std::size_t requested() const noexcept { return requested_; }
  std::size_t available() const noexcept { return available_; }

 private:
  std::size_t requested_;
  std::size_t available_;
};

/// Malformed on-disk data. The message names the byte offset of the problem.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Bad user input that is not a file-format problem.
class InputError : public Error {
 public:
  using Error::Error;
};

}  // namespace ausm
