#pragma once

#include <stdexcept>
#include <string>

namespace miml {

// Malformed or inconsistent configuration. Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed, inconsistent or unusable input data. Maps to exit code 2.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Training/evaluation failure, including tripped leakage guards. Exit code 3.
class RuntimeFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace miml
