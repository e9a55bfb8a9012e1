#pragma once

#include <stdexcept>
#include <string>

namespace mirsel {

// Malformed or inconsistent input data (I/O, parse, shape, degenerate rows).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid parameters or configuration supplied by the caller.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Numerical failure: singular systems, non-finite results.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mirsel
