#include "bundling/error.h"

namespace bundling {

const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kShape:
      return "shape error";
    case ErrorKind::kContract:
      return "contract error";
    case ErrorKind::kParse:
      return "parse error";
    case ErrorKind::kData:
      return "data error";
    case ErrorKind::kTrainingDiverged:
      return "training diverged";
    case ErrorKind::kAttackFailed:
      return "attack failed";
    case ErrorKind::kIo:
      return "i/o error";
  }
  return "error";
}

}  // namespace bundling
