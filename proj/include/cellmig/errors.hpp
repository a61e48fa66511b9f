#pragma once

#include <stdexcept>
#include <string>

namespace cellmig {

/// Raised when a numerical run loses validity (NaN state, failed linear
/// solve, runaway kinetic speed). Configuration problems use
/// std::invalid_argument instead.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cellmig
