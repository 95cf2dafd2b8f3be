#pragma once

#include <stdexcept>
#include <string>

namespace opcontour {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class DimensionMismatch : public Error {
public:
  using Error::Error;
};

class GridMismatch : public Error {
public:
  using Error::Error;
};

/// Thrown when -lambda is (numerically) in the spectrum of the operator.
class SingularResolvent : public Error {
public:
  using Error::Error;
};

/// Eigenvector matrix numerically singular (e.g. a Jordan block).
class IllConditioned : public Error {
public:
  using Error::Error;
};

class FunctionSingularOnSpectrum : public Error {
public:
  using Error::Error;
};

class NotSectorial : public Error {
public:
  using Error::Error;
};

class QuadratureNotConverged : public Error {
public:
  using Error::Error;
};

class BranchCutViolation : public Error {
public:
  using Error::Error;
};

class InconsistentSquareRoot : public Error {
public:
  using Error::Error;
};

class ExponentOutOfRange : public Error {
public:
  using Error::Error;
};

class SplitIdentityViolation : public Error {
public:
  using Error::Error;
};

class ContourOrderViolation : public Error {
public:
  using Error::Error;
};

class GammaTooSmall : public Error {
public:
  using Error::Error;
};

class OverflowDetected : public Error {
public:
  using Error::Error;
};

class SchemaError : public Error {
public:
  using Error::Error;
};

}  // namespace opcontour
