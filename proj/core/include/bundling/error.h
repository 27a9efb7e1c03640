#ifndef BUNDLING_ERROR_H_
#define BUNDLING_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bundling {

enum class ErrorKind {
  kShape,             // dimension mismatch between inputs and a model
  kContract,          // violated precondition
  kParse,             // malformed config or model file
  kData,              // dataset ingestion failure
  kTrainingDiverged,  // non-finite loss during training
  kAttackFailed,      // non-finite gradient inside an attack
  kIo,
};

const char* ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

class AttackFailedError : public Error {
 public:
  AttackFailedError(std::size_t example_index, const std::string& message)
      : Error(ErrorKind::kAttackFailed, message),
        example_index_(example_index) {}

  std::size_t example_index() const { return example_index_; }

 private:
  std::size_t example_index_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void Require(bool condition, const std::string& message) {
  if (!condition) Fail(ErrorKind::kContract, message);
}

}  // namespace bundling

#endif  // BUNDLING_ERROR_H_
