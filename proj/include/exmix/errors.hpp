#pragma once

#include <stdexcept>
#include <string>

namespace exmix {

// Error families map to distinct process exit codes in the CLI.
enum class ErrorFamily {
  Input = 2,      // malformed files, bad flags, failed preconditions
  Support = 3,    // empty extreme set, empty/mismatched support
  Numerical = 4,  // degenerate densities, optimizer or eigen-solver failures
  Io = 5,         // network, checksum, filesystem
};

class Error : public std::runtime_error {
 public:
  Error(ErrorFamily family, const std::string& what)
      : std::runtime_error(what), family_(family) {}
  ErrorFamily family() const noexcept { return family_; }
  int exit_code() const noexcept { return static_cast<int>(family_); }

 private:
  ErrorFamily family_;
};

#define EXMIX_DEFINE_ERROR(Name, Family)                                   \
  class Name : public Error {                                              \
   public:                                                                 \
    explicit Name(const std::string& what) : Error(ErrorFamily::Family, what) {} \
  };

EXMIX_DEFINE_ERROR(InputError, Input)
EXMIX_DEFINE_ERROR(ParseError, Input)
EXMIX_DEFINE_ERROR(InvalidTheta, Input)
EXMIX_DEFINE_ERROR(LengthMismatch, Input)
EXMIX_DEFINE_ERROR(UnsupportedFormat, Input)
EXMIX_DEFINE_ERROR(InfeasibleK, Input)

EXMIX_DEFINE_ERROR(EmptyExtremeSet, Support)
EXMIX_DEFINE_ERROR(BelowScale, Support)
EXMIX_DEFINE_ERROR(EmptySupport, Support)
EXMIX_DEFINE_ERROR(UncoveredCoordinate, Support)
EXMIX_DEFINE_ERROR(SupportMismatch, Support)

EXMIX_DEFINE_ERROR(BoundaryPoint, Numerical)
EXMIX_DEFINE_ERROR(DegeneratePolar, Numerical)
EXMIX_DEFINE_ERROR(AllComponentsZero, Numerical)
EXMIX_DEFINE_ERROR(DeadComponent, Numerical)
EXMIX_DEFINE_ERROR(OptimizerFailure, Numerical)
EXMIX_DEFINE_ERROR(ConvergenceFailure, Numerical)

EXMIX_DEFINE_ERROR(NetworkError, Io)
EXMIX_DEFINE_ERROR(ChecksumMismatch, Io)
EXMIX_DEFINE_ERROR(IoError, Io)

#undef EXMIX_DEFINE_ERROR

}  // namespace exmix
