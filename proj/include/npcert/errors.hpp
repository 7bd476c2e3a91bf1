#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace npcert {

// An input that violates an operation's contract.
class invalid_input_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A numeric routine that cannot deliver a finite, trustworthy result.
class numeric_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed structured input; carries the 1-based line number.
class parse_error : public invalid_input_error {
public:
    parse_error(std::size_t line, const std::string& message)
        : invalid_input_error("line " + std::to_string(line) + ": " + message),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Filesystem-level failure (unreadable input, unwritable output).
class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace npcert
