#pragma once

#include <stdexcept>
#include <string>

namespace penlik {

// Base of every error raised by the library. Each failure mode named in the
// operation contracts gets its own type so callers can dispatch on it.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define PENLIK_DEFINE_ERROR(Name)        \
    class Name : public Error {          \
    public:                              \
        using Error::Error;              \
    }

PENLIK_DEFINE_ERROR(InvalidArgument);
PENLIK_DEFINE_ERROR(ParameterOutsideModel);
PENLIK_DEFINE_ERROR(NonFiniteDensity);
PENLIK_DEFINE_ERROR(ZeroDistance);
PENLIK_DEFINE_ERROR(RegimeMismatch);
PENLIK_DEFINE_ERROR(NoBracket);
PENLIK_DEFINE_ERROR(EmptyModelList);
PENLIK_DEFINE_ERROR(CalibrationFailed);
PENLIK_DEFINE_ERROR(OracleUnavailable);
PENLIK_DEFINE_ERROR(QuadratureFailure);
PENLIK_DEFINE_ERROR(InvalidLambda);
PENLIK_DEFINE_ERROR(InvalidDensity);
PENLIK_DEFINE_ERROR(EmptyTrajectory);
PENLIK_DEFINE_ERROR(NoFeasibleInit);
PENLIK_DEFINE_ERROR(InsufficientHistory);
PENLIK_DEFINE_ERROR(RateOutOfRange);
PENLIK_DEFINE_ERROR(InconsistentHistory);
PENLIK_DEFINE_ERROR(ConfigError);
PENLIK_DEFINE_ERROR(IoFailure);

#undef PENLIK_DEFINE_ERROR

} // namespace penlik
