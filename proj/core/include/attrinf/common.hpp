#pragma once

#include <stdexcept>
#include <string>

namespace attrinf {

// Exit codes used by the CLI; library code signals them via the exception
// types below.
enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 2,
  kExitMissingArtifact = 3,
  kExitNumerical = 4,
};

// Bad input: malformed config, violated precondition, unparseable file.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// A pipeline stage was invoked before its upstream artifacts exist.
class MissingArtifactError : public std::runtime_error {
 public:
  explicit MissingArtifactError(const std::string& msg)
      : std::runtime_error(msg) {}
};

// Non-finite values where finite ones are required (diverged training,
// NaN logits, degenerate fits).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace attrinf
