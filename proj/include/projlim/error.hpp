#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace projlim {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// Enumeration or pairing-count guard exceeded.
class GuardExceeded : public Error {
public:
    using Error::Error;
};

/// Overflow to a non-finite value during evaluation.
class RangeError : public Error {
public:
    using Error::Error;
};

/// Cholesky pivot at or below tolerance. `pivot()` is 1-based.
class NotPositiveDefinite : public Error {
public:
    NotPositiveDefinite(std::size_t pivot, double value)
        : Error("covariance is not positive definite: pivot " + std::to_string(pivot) +
                " has value " + std::to_string(value)),
          pivot_(pivot), value_(value) {}

    std::size_t pivot() const noexcept { return pivot_; }
    double value() const noexcept { return value_; }

private:
    std::size_t pivot_;
    double value_;
};

/// Error raised while working on a particular level of a chain.
class LevelError : public Error {
public:
    LevelError(std::size_t level, const std::string& what)
        : Error("level " + std::to_string(level) + ": " + what), level_(level) {}

    std::size_t level() const noexcept { return level_; }

private:
    std::size_t level_;
};

/// Too many non-finite Monte Carlo evaluations.
class NonFiniteSamples : public Error {
public:
    using Error::Error;
};

/// Normalization estimate indistinguishable from zero.
class IllConditioned : public Error {
public:
    using Error::Error;
};

/// Non-finite entry in a scalar net. `index()` is the 1-based level.
class NonFiniteNetEntry : public Error {
public:
    explicit NonFiniteNetEntry(std::size_t index)
        : Error("non-finite net entry at level " + std::to_string(index)), index_(index) {}

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

} // namespace projlim
