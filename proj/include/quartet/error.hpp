#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace quartet {

enum class ErrorCode {
  kPrecondition,
  kDegenerateCloud,
  kTranslationResult,
  kNonTerminatingGroup,
  kNotASymmetry,
  kScoreUndefined,
  kSizeMismatch,
  kSolverCap,
  kDegenerateFit,
  kParse,
  kIo,
  kConfig,
};

std::string_view error_code_name(ErrorCode code);

// All library failures surface as this exception. The code is stable and
// machine-parsable; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace quartet
