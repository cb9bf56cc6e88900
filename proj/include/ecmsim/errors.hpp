#pragma once

#include <stdexcept>

namespace ecmsim {

// An input file is missing, unreadable, or malformed.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A value or configuration violates a documented invariant.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An output file could not be written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace ecmsim
