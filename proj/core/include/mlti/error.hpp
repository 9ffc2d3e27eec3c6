#pragma once

#include <stdexcept>
#include <string>

namespace mlti {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside its contract: bad index, shape mismatch, invalid mode list.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Operand is numerically singular (U-inverse, resolvent at a pole).
class SingularError : public Error {
public:
    SingularError(const std::string& what, double condition_estimate)
        : Error(what), condition_estimate(condition_estimate) {}
    double condition_estimate;
};

/// Iterative method failed to converge; carries the last residual.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual)
        : Error(what), residual(residual) {}
    double residual;
};

/// Request exceeds an implemented capability (e.g. k-rank column cap).
class CapabilityError : public Error {
public:
    using Error::Error;
};

/// A required precondition does not hold (e.g. unstable A for a Lyapunov solve).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// File parse or serialization failure.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace mlti
