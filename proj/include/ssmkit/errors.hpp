#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace ssmkit {

// Base for all library errors so callers can catch one type.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Configuration / input validation.
struct ConfigError : Error {
  using Error::Error;
};
struct DimensionMismatch : Error {
  using Error::Error;
};
struct OverflowError : Error {
  using Error::Error;
};

// Model construction.
struct SingularMass : Error {
  using Error::Error;
};
struct AsymmetryError : Error {
  using Error::Error;
};

// Spectral preconditions.
struct UnstableSpectrum : Error {
  using Error::Error;
};
struct DefectiveMatrix : Error {
  using Error::Error;
};
struct SingularTransform : Error {
  using Error::Error;
};

// Solver.
struct MissingLowerOrder : Error {
  using Error::Error;
};
struct OuterResonanceBreakdown : Error {
  OuterResonanceBreakdown(int order_, int a_, int b_, std::complex<double> lambda_,
                          const std::string& msg)
      : Error(msg), order(order_), a(a_), b(b_), lambda(lambda_) {}
  int order;
  int a;
  int b;
  std::complex<double> lambda;
};

// Reduced dynamics / validation.
struct RealMasterPairUnsupported : Error {
  using Error::Error;
};
struct NonNegligibleImaginaryPart : Error {
  using Error::Error;
};
struct BlowUp : Error {
  using Error::Error;
};
struct StepFailure : Error {
  using Error::Error;
};
struct EventNotReached : Error {
  using Error::Error;
};

}  // namespace ssmkit
