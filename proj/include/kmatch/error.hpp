#ifndef KMATCH_ERROR_HPP
#define KMATCH_ERROR_HPP

#include <stdexcept>
#include <string>

namespace kmatch {

/// Malformed input file or argument.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parameters that admit no valid object (e.g. 2m < (k+1)n).
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An internal consistency check failed. Always a bug.
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

#define KMATCH_CHECK(cond, msg)                                                \
    do {                                                                       \
        if (!(cond)) throw ::kmatch::InvariantError(std::string(msg));         \
    } while (0)

} // namespace kmatch

#endif
