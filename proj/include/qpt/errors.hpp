#pragma once

#include <stdexcept>
#include <string>

namespace qpt {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition of an operation was violated by its arguments.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// The potential's Fourier data is not Hermitian-symmetric (v is not real).
class InvalidPotential : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// A numerical routine failed: eigensolver breakdown, non-converging
/// quadrature, or a fit with no usable data.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Floating-point input cannot support the requested continued-fraction depth.
class PrecisionExhausted : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace qpt
