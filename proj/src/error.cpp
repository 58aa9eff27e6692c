#include "orbitmart/error.hpp"

namespace orbitmart {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidSpec: return "invalid spec";
    case ErrorKind::PayloadMismatch: return "payload mismatch";
    case ErrorKind::DegenerateDesign: return "degenerate design";
    case ErrorKind::NumericsFailure: return "numerics failure";
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::Internal: return "internal error";
  }
  return "unknown";
}

}  // namespace orbitmart
