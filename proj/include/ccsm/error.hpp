#pragma once

#include <stdexcept>
#include <string>

namespace ccsm {

// Base class for all library errors. Subclasses map 1:1 onto the CLI's
// documented exit codes (see tools/ccsm.cpp).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed domain value (event code, gender, date field contents).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Precondition violation on an operation argument.
class ArgumentError : public Error {
public:
    using Error::Error;
};

// Bad content in a data file; message carries the offending row number.
class IngestError : public Error {
public:
    using Error::Error;
};

// Bad config file; message carries the offending line number.
class ConfigError : public Error {
public:
    using Error::Error;
};

// The study selects zero exposed patients.
class EmptyStudyError : public Error {
public:
    using Error::Error;
};

// A case-control matching stratum ran out of eligible controls.
class MatchingError : public Error {
public:
    using Error::Error;
};

// Regression outcome has a single class.
class DegenerateDataError : public Error {
public:
    using Error::Error;
};

// Regression design matrix is rank deficient; message names the column.
class CollinearityError : public Error {
public:
    using Error::Error;
};

// Unreadable or unwritable path.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace ccsm
