#pragma once

#include <stdexcept>
#include <string>

namespace fkpz {

// Base for every error thrown by the library. `code()` is the stable
// machine-readable name; the message carries context.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& msg)
      : std::runtime_error(code + ": " + msg), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

private:
  std::string code_;
};

#define FKPZ_ERROR(Name)                                           \
  class Name : public Error {                                      \
  public:                                                          \
    explicit Name(const std::string& msg) : Error(#Name, msg) {}   \
  }

FKPZ_ERROR(UnsupportedShape);
FKPZ_ERROR(SpacingTooCoarse);
FKPZ_ERROR(NonFiniteSample);
FKPZ_ERROR(GridMismatch);
FKPZ_ERROR(QuadratureFailure);
FKPZ_ERROR(DenseStorageExceeded);
FKPZ_ERROR(EigFailure);
FKPZ_ERROR(NonPositiveTime);
FKPZ_ERROR(InsufficientSamples);
FKPZ_ERROR(SingularOperator);
FKPZ_ERROR(DimensionTooSmall);
FKPZ_ERROR(TimeGridTooCoarse);
FKPZ_ERROR(LinearSolveFailure);
FKPZ_ERROR(WindowTooNarrow);
FKPZ_ERROR(NonPositiveK);
FKPZ_ERROR(WeightOutOfRange);
FKPZ_ERROR(NonConvexPhi);
FKPZ_ERROR(Diverged);
FKPZ_ERROR(MaxIterExceeded);
FKPZ_ERROR(MonotonicityViolation);
FKPZ_ERROR(CflViolation);
FKPZ_ERROR(ExponentOutOfRange);
FKPZ_ERROR(EmptyBand);
FKPZ_ERROR(DegenerateDenominator);
FKPZ_ERROR(ConfigInvalid);
FKPZ_ERROR(InvalidParams);

#undef FKPZ_ERROR

}  // namespace fkpz
