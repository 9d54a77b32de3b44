#pragma once

#include <stdexcept>
#include <string>

namespace trimode {

// Bad or contradictory run configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Unusable measured data: empty streams, over-subtracted noise,
// nonpositive variances and the like (CLI exit code 3).
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Numeric-validity failure: parameter regime outside a formula's domain,
// quadrature non-convergence, degenerate normalization (CLI exit code 4).
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Requested joint statistics have no classical (positive-P) sampling model.
struct NonclassicalParamsError : NumericError {
  explicit NonclassicalParamsError(const std::string& what) : NumericError(what) {}
};

}  // namespace trimode
