#pragma once

#include <stdexcept>
#include <string>

namespace confhol {

// Base of every error the library throws. `kind()` is the stable name used in
// JSON error objects and CLI exit-code mapping.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }
  // numerical failures map to exit code 3, everything else to 2
  virtual bool numerical() const noexcept { return false; }

 private:
  std::string kind_;
};

#define CONFHOL_ERROR(Name, IsNumerical)                                   \
  class Name : public Error {                                              \
   public:                                                                 \
    explicit Name(const std::string& what) : Error(#Name, what) {}         \
    bool numerical() const noexcept override { return IsNumerical; }       \
  };

CONFHOL_ERROR(DomainError, false)
CONFHOL_ERROR(DegenerateMetric, true)
CONFHOL_ERROR(DimensionError, false)
CONFHOL_ERROR(GaugeMismatch, false)
CONFHOL_ERROR(SigmaVanishes, true)
CONFHOL_ERROR(IntegratorFailure, true)
CONFHOL_ERROR(DomainExit, true)
CONFHOL_ERROR(NoRecurrentField, false)
CONFHOL_ERROR(SpecError, false)
CONFHOL_ERROR(NotEinstein, false)
CONFHOL_ERROR(ZeroScalar, false)
CONFHOL_ERROR(HypothesisFailed, false)
CONFHOL_ERROR(NotPrWave, false)
CONFHOL_ERROR(TooLarge, false)
CONFHOL_ERROR(ParseError, false)

#undef CONFHOL_ERROR

}  // namespace confhol
