#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace adfll {

// Invalid experiment/environment configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Stored content does not hash to the id it was filed under.
class IntegrityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A TD target or weight became non-finite.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, std::size_t transition_index)
        : std::runtime_error(what), index_(transition_index) {}
    [[nodiscard]] std::size_t transition_index() const { return index_; }

private:
    std::size_t index_;
};

// Mixed sampling was asked to draw from nothing.
class EmptySourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Paired test on identical samples.
class DegenerateInputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace adfll
