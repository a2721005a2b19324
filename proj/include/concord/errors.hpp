#pragma once

#include <stdexcept>
#include <string>

namespace concord {

// Malformed or inconsistent input data (files, records, references).
class SchemaError : public std::runtime_error {
public:
    explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

// A precondition of an operation was violated by the caller.
class DomainError : public std::invalid_argument {
public:
    explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Hard-mode inference found no feasible assignment and the caller asked
// for an error instead of a soft fallback.
class InfeasibleError : public std::runtime_error {
public:
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace concord
