#include "mfplan/error.hpp"

namespace mfplan {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDomain: return "domain_error";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kInfeasibleEndpoints: return "infeasible_endpoints";
    case ErrorCode::kUnsupported: return "unsupported";
    case ErrorCode::kNumerical: return "numerical_error";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kBoundViolation: return "bound_violation";
  }
  return "unknown";
}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace mfplan
