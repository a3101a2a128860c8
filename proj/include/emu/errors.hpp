#pragma once

#include <stdexcept>

namespace emu {

/// Base class for all emu library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input text that cannot be parsed (CSV rows, checkpoint lines).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Well-formed input that violates a documented precondition.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Scalar argument outside its mathematical domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Grid or vector dimension mismatch.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Non-finite value produced or encountered.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace emu
