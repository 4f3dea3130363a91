#include "charsoft/error.hpp"

namespace charsoft {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kUsage:
      return "usage";
    case ErrorKind::kSchema:
      return "schema";
    case ErrorKind::kPrecondition:
      return "precondition";
    case ErrorKind::kNumeric:
      return "numeric";
  }
  return "unknown";
}

}  // namespace charsoft
