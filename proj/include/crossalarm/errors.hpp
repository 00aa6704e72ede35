#pragma once

#include <stdexcept>
#include <string>

namespace crossalarm {

// Error taxonomy shared across the library. The CLI maps these onto exit
// codes: config/data/dimension/usage -> 2, numerical failure -> 3.

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace crossalarm
