#pragma once

#include <stdexcept>
#include <string>

namespace rwpm {

// Base of every error the library raises. The CLI maps subclasses onto exit
// codes, so new error kinds should derive from one of the groups below.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input format group (CLI exit 2).
class IoError : public Error {
public:
    using Error::Error;
};
class FormatError : public Error {
public:
    using Error::Error;
};
class LengthError : public Error {
public:
    using Error::Error;
};
class DataError : public Error {
public:
    using Error::Error;
};
class ParameterError : public Error {
public:
    using Error::Error;
};

// Dimension group (CLI exit 3).
class SizeError : public Error {
public:
    using Error::Error;
};
class PartitionError : public Error {
public:
    using Error::Error;
};
class EvaluationError : public Error {
public:
    using Error::Error;
};

// Numerical group (CLI exit 4).
class NumericalError : public Error {
public:
    using Error::Error;
};
class DegenerateRowError : public NumericalError {
public:
    DegenerateRowError(std::size_t row, const std::string& what)
        : NumericalError(what), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};
class CalibrationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

} // namespace rwpm
