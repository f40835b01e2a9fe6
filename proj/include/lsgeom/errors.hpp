#pragma once

#include <stdexcept>
#include <string>

namespace lsgeom {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Inputs violate a documented precondition (bad value, malformed descriptor).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Vector or matrix shapes disagree.
class DimensionError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// A computation produced non-finite values or hit a singular/ill-conditioned system.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// A dual vector lies outside the dual feasible set beyond tolerance.
class InfeasibleDual : public Error {
public:
    using Error::Error;
};

/// The LASSO homotopy could not continue (rank-deficient active block, exhausted path).
class PathError : public Error {
public:
    using Error::Error;
};

/// Reading or writing an external file failed.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace lsgeom
