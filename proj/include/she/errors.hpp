#pragma once

#include <stdexcept>
#include <string>

namespace she {

// Base of all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed kernel/coefficient/lattice/config text. `position` is the
// character offset of the offending token, or npos when unknown.
class SpecError : public Error {
public:
    SpecError(const std::string& what, std::size_t position = std::string::npos)
        : Error(position == std::string::npos
                    ? what
                    : what + " (at position " + std::to_string(position) + ")"),
          position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

// A mathematical precondition or theorem hypothesis does not hold.
class HypothesisError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace she
