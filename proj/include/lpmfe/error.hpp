#pragma once

#include <stdexcept>
#include <string>

namespace lpmfe {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad user input: config values, grid sizes, malformed flows.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A coefficient evaluated to NaN/inf, or a jump left the domain.
class ModelError : public Error {
public:
    using Error::Error;
};

/// Explicit pairing refused because the CFL number exceeds one.
class CflError : public Error {
public:
    using Error::Error;
};

/// LP infeasible, unbounded, or a post-solve invariant broke.
class SolverError : public Error {
public:
    using Error::Error;
};

} // namespace lpmfe
