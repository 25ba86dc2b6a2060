#pragma once

#include <stdexcept>
#include <string>

namespace fcl {

// Mirrors fcl_status in the C API; values must stay in sync.
enum class ErrorCode : int {
  Domain = 1,
  Parameter = 2,
  Io = 3,
  Format = 4,
  Config = 5,
  State = 6,
  Numeric = 7,
  DimensionMismatch = 8,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

// IDX parsing failures are distinguished by kind so callers can tell a bad
// file apart from a mismatched pair of files.
class IdxError : public Error {
public:
  enum class Kind { Magic, Truncated, CountMismatch, Open };
  IdxError(Kind kind, const std::string& what)
      : Error(kind == Kind::Open ? ErrorCode::Io : ErrorCode::Format, what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

} // namespace fcl
