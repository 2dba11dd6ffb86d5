#pragma once

#include <stdexcept>
#include <string>

namespace nesp {

inline constexpr const char* kEngineVersion = "nesp 0.1.0";

// Malformed or inconsistent input data (files, shapes, graph preconditions).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Caller misuse of an interface (bad flag combination, invalid parameter).
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// An optimizer run left the admissible region (non-finite or exploding layout).
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace nesp
