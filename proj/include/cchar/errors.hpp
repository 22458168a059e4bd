#pragma once

#include <stdexcept>
#include <string>

namespace cchar {

// Every failure raised by the library derives from Error so callers can report
// the failing stage without knowing the concrete type.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define CCHAR_DEFINE_ERROR(Name)                                               \
    class Name : public Error {                                                \
    public:                                                                    \
        explicit Name(const std::string& what) : Error(#Name, what) {}         \
    };

CCHAR_DEFINE_ERROR(SymplecticViolation)
CCHAR_DEFINE_ERROR(SpectralAmbiguity)
CCHAR_DEFINE_ERROR(DecompositionAmbiguity)
CCHAR_DEFINE_ERROR(NonConvergence)
CCHAR_DEFINE_ERROR(SlopeUnstable)
CCHAR_DEFINE_ERROR(GapTooSmall)
CCHAR_DEFINE_ERROR(OriginSingularity)
CCHAR_DEFINE_ERROR(StepFailure)
CCHAR_DEFINE_ERROR(EnergyDrift)
CCHAR_DEFINE_ERROR(SymmetryAmbiguous)
CCHAR_DEFINE_ERROR(DegenerateRadii)
CCHAR_DEFINE_ERROR(DualGaugeNonConvergence)
CCHAR_DEFINE_ERROR(MorseUnstable)
CCHAR_DEFINE_ERROR(InvariantViolation)
CCHAR_DEFINE_ERROR(NoTupleFound)
CCHAR_DEFINE_ERROR(LedgerFailure)
CCHAR_DEFINE_ERROR(AssignmentInfeasible)
CCHAR_DEFINE_ERROR(ConfigError)
CCHAR_DEFINE_ERROR(PSViolationSuspected)

#undef CCHAR_DEFINE_ERROR

}  // namespace cchar
