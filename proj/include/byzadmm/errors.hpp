#pragma once

#include <stdexcept>
#include <string>

namespace byzadmm {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration: bad dimensions, missing keys, constraint violations.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed input files (IDX, LIBSVM, config text).
class ParseError : public Error {
public:
    using Error::Error;
};

// Broken round protocol, e.g. a missing worker message in a synchronous round.
class ProtocolError : public Error {
public:
    using Error::Error;
};

// Numerical failure: non-finite state, inner solver non-convergence.
class NumericError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace byzadmm
