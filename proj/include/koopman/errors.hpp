#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace koopman {

enum class ErrorCode {
  InvalidInput,
  EvaluationOverflow,
  RankError,
  AssumptionViolation,
  InternalInvariantViolation,
  IoError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "INVALID_INPUT";
    case ErrorCode::EvaluationOverflow: return "EVALUATION_OVERFLOW";
    case ErrorCode::RankError: return "RANK_ERROR";
    case ErrorCode::AssumptionViolation: return "ASSUMPTION_VIOLATION";
    case ErrorCode::InternalInvariantViolation: return "INTERNAL_INVARIANT_VIOLATION";
    case ErrorCode::IoError: return "IO_ERROR";
  }
  return "UNKNOWN";
}

/// Single exception type for the library; the code identifies the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by dictionary evaluation and integration when a value leaves the finite range.
class OverflowError : public Error {
 public:
  OverflowError(std::size_t row, const std::string& what)
      : Error(ErrorCode::EvaluationOverflow, what + " (row " + std::to_string(row) + ")"), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

namespace detail {
[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}
}  // namespace detail

}  // namespace koopman
