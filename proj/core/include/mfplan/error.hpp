#pragma once

#include <stdexcept>
#include <string>

namespace mfplan {

enum class ErrorCode {
  kDomain,              // argument outside the mathematical domain (m < 0, t <= 0, ...)
  kShapeMismatch,       // fields built on different grids or with wrong sizes
  kInfeasibleEndpoints, // endpoint densities with different mass
  kUnsupported,         // valid request the implementation does not cover (d = 2 W2, ...)
  kNumerical,           // non-convergence, non-finite values
  kInvalidArgument,     // malformed configuration
  kIo,                  // file or JSON problems
  kBoundViolation,      // structural growth bound violated
};

const char* to_string(ErrorCode code);

// All library failures are reported through this exception type. `what()`
// carries a human readable message; `code()` is stable and machine-readable.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}
inline void require(bool condition, ErrorCode code, const char* message) {
  if (!condition) fail(code, message);
}

}  // namespace mfplan
