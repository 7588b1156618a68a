#pragma once

#include <stdexcept>
#include <string>

namespace framecast {

// Error taxonomy shared by the whole toolkit. The CLI maps these onto its
// exit-code contract: UsageError -> 1, DataError -> 2, NumericError -> 3.

/// Caller broke an API contract (bad shapes, bad flags, invalid config).
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

/// Input data is malformed or out of contract (truncated file, empty mesh).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Computation produced non-finite values.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace framecast
