#pragma once

#include <stdexcept>
#include <string>

namespace rdcap {

// Rejected configuration or experiment spec (CLI exit code 1).
class InvalidConfig : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of a formula.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// A quantity that is infinite in expectation (e.g. a route that is never found).
class DivergenceError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class InvalidRoute : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

} // namespace rdcap
