#ifndef SCBN_ERROR_HPP
#define SCBN_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace scbn {

/**
 * @brief Base class for all errors raised by the library.
 */
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * @brief Input data violates a structural invariant (duplicate ids, bad lengths, empty sets).
 */
class ValidationError : public Error {
public:
    using Error::Error;
};

/**
 * @brief A numeric argument lies outside the domain of the operation.
 */
class DomainError : public Error {
public:
    using Error::Error;
};

/**
 * @brief Malformed input file. Carries the 1-based line number of the offending line.
 */
class ParseError : public Error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

} // namespace scbn

#endif
