#pragma once

#include <stdexcept>
#include <string>

namespace pucci {

/// Bad input: an invariant of a parameter block or a precondition failed.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// A numerical procedure did not deliver (non-convergence, bracket escape,
/// search exhaustion, policy cycling).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void require(bool ok, const std::string& message) {
    if (!ok) throw ValidationError(message);
}

} // namespace detail
} // namespace pucci
