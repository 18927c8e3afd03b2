#pragma once

#include <stdexcept>
#include <string>

namespace riskagg {

// Numerical failure at run time: factorization breakdown, postcondition
// violation, non-finite result where a finite one is guaranteed.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Request exceeds a configured cap (tree size, matrix size, memory budget).
struct ResourceError : std::runtime_error {
    explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid or inconsistent experiment configuration.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace riskagg
