#pragma once

#include <stdexcept>
#include <string>

namespace selfsim {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define SELFSIM_ERROR(Name)                 \
    class Name : public Error {             \
    public:                                 \
        using Error::Error;                 \
    }

// EOS evaluated outside its declared validity domain.
SELFSIM_ERROR(DomainError);
SELFSIM_ERROR(UnsupportedFamily);
// ODE denominator X(X^2 - C^2) vanished.
SELFSIM_ERROR(SingularPoint);
SELFSIM_ERROR(InvalidExponent);
SELFSIM_ERROR(NoRoot);
SELFSIM_ERROR(EntropyViolation);
SELFSIM_ERROR(ConstraintError);
SELFSIM_ERROR(NoSignChange);
SELFSIM_ERROR(MaxIterations);
SELFSIM_ERROR(CrossingFailure);
SELFSIM_ERROR(GridError);
SELFSIM_ERROR(ConfigError);

#undef SELFSIM_ERROR

} // namespace selfsim
