#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mdtune {

// Values are part of the C ABI (see mdtune.h); do not renumber.
enum class ErrorCode : int {
  invalid_argument = 1,
  invalid_config = 2,
  missing_datum = 3,
  parse_error = 4,
  executor_unavailable = 5,
  io_error = 6,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(ErrorCode::invalid_argument, what) {}
};

class InvalidConfig : public Error {
 public:
  explicit InvalidConfig(const std::string& what) : Error(ErrorCode::invalid_config, what) {}
};

// A price, idle power or similar optional datum is needed but was not declared.
class MissingDatum : public Error {
 public:
  explicit MissingDatum(const std::string& what) : Error(ErrorCode::missing_datum, what) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(ErrorCode::parse_error, what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  // Byte offset into the parsed text where the problem starts.
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class ExecutorUnavailable : public Error {
 public:
  explicit ExecutorUnavailable(const std::string& what)
      : Error(ErrorCode::executor_unavailable, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCode::io_error, what) {}
};

}  // namespace mdtune
