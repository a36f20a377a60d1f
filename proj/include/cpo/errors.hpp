#pragma once

#include <stdexcept>
#include <string>

namespace cpo {

/// Bad inputs: wrong dimensions, out-of-range parameters, malformed files.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The calibrated quantile is +inf, so the region is all of the output space.
class UnboundedRegion : public std::runtime_error {
public:
    UnboundedRegion()
        : std::runtime_error("region is unbounded; decrease alpha or enlarge calibration set") {}
};

/// Feasible set is empty or cannot be reached.
class Infeasible : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative routine exhausted its budget without meeting tolerance.
class NumericFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace cpo
