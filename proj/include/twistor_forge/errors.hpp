#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace twistor_forge {

/// Base of every error raised by the library. `code()` is a stable tag used
/// in reports and by the CLI.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

  /// Optional reproducible witness (evaluation point, offending vector).
  std::vector<double> witness_point;
  std::vector<double> witness_vector;

 private:
  std::string code_;
};

#define TWISTOR_FORGE_ERROR(Name)                                  \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& what) : Error(#Name, what) {} \
  };

TWISTOR_FORGE_ERROR(DimensionError)
TWISTOR_FORGE_ERROR(DegreeError)
TWISTOR_FORGE_ERROR(StructureError)
TWISTOR_FORGE_ERROR(RankError)
TWISTOR_FORGE_ERROR(RealKernelError)
TWISTOR_FORGE_ERROR(NotNonDegenerate)
TWISTOR_FORGE_ERROR(PowerConditionViolated)
TWISTOR_FORGE_ERROR(SphereError)
TWISTOR_FORGE_ERROR(RangeError)
TWISTOR_FORGE_ERROR(FiberDriftError)
TWISTOR_FORGE_ERROR(LiftError)
TWISTOR_FORGE_ERROR(BidegreeError)
TWISTOR_FORGE_ERROR(NotSemipositive)
TWISTOR_FORGE_ERROR(LemmaViolation)
TWISTOR_FORGE_ERROR(ArityError)
TWISTOR_FORGE_ERROR(NotIsotropic)
TWISTOR_FORGE_ERROR(ConeError)
TWISTOR_FORGE_ERROR(NotFujikiType)
TWISTOR_FORGE_ERROR(ZeroVectorError)
TWISTOR_FORGE_ERROR(SignatureError)
TWISTOR_FORGE_ERROR(ParseError)

#undef TWISTOR_FORGE_ERROR

}  // namespace twistor_forge
