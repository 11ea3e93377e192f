#pragma once

#include <stdexcept>
#include <string>

namespace extra {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A matrix expected to be positive (semi)definite is not.
class NotPsdError : public Error {
public:
    explicit NotPsdError(const std::string& what) : Error(what) {}
};

/// Input dimensions do not conform.
class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& what) : Error(what) {}
};

/// A solver iterate became non-finite.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, long iteration)
        : Error(what + " at iteration " + std::to_string(iteration)),
          iteration_(iteration) {}

    long iteration() const { return iteration_; }

private:
    long iteration_;
};

}  // namespace extra
