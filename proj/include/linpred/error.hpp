#pragma once

#include <stdexcept>
#include <string>

namespace linpred {

enum class ErrorCode {
  InvalidArgument,
  GridMismatch,
  Truncated,
  LengthMismatch,
  UnknownVersion,
  MalformedHeader,
  Io,
  Parse,
  Singular,
  UncoveredSignature,
  NotConverged,
};

const char *to_string(ErrorCode code);

// Every library failure is reported through this type. The code lets the CLI
// and file readers distinguish failure classes without parsing messages.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  // Singular systems and declared non-convergence are numerical failures;
  // everything else is a data/input error.
  bool numerical() const noexcept {
    return code_ == ErrorCode::Singular || code_ == ErrorCode::NotConverged;
  }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string &what) {
  throw Error(code, what);
}

inline void require(bool cond, const std::string &what) {
  if (!cond) {
    fail(ErrorCode::InvalidArgument, what);
  }
}

} // namespace linpred
