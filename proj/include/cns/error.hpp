#pragma once

#include <stdexcept>
#include <string>

namespace cns {

/// Caller passed a value outside an operation's domain.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A probe exchange violated the RTT protocol (bad echo, negative RTT, ...).
class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed probe frame.
class DecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A randomized construction gave up after its retry budget.
class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File or stream failure; the message names the path involved.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace cns
