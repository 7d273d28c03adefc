#pragma once

#include <stdexcept>
#include <string>

namespace pssmp {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid model parameters or malformed model file.
class ModelError : public Error {
public:
    using Error::Error;
};

/// Argument outside the domain of an operation (e.g. y > d).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Iterative procedure (root finding, series, quadrature) hit its cap.
class NoConvergence : public Error {
public:
    using Error::Error;
};

/// Operation requires a non-degenerate model, i.e. Phi(p) not in alpha*N.
class Degenerate : public Error {
public:
    using Error::Error;
};

/// Operation defined only for finite-variation models.
class NotFiniteVariation : public Error {
public:
    using Error::Error;
};

/// Model/parameter combination the simulator cannot handle.
class Unsupported : public Error {
public:
    using Error::Error;
};

/// Two independent evaluation routes disagree beyond tolerance.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

}  // namespace pssmp
