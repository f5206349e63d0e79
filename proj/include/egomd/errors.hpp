#pragma once

#include <stdexcept>
#include <string>

namespace egomd {

// Bad input: files that do not parse, out-of-range arguments, missing species.
class UserError : public std::runtime_error {
public:
    explicit UserError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure: integrator blow-up, estimator signal below noise,
// non-converging fits, bisection brackets that do not straddle.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace egomd
