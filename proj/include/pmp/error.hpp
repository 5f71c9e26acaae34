#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pmp {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Inputs that violate a documented precondition (shape mismatch, even counts, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Raised when an explicit diffusion substep would violate dt*Q_ii/step_i^2 <= 1/2.
class StabilityError : public Error {
public:
    StabilityError(std::size_t axis, std::size_t substep, double ratio)
        : Error("stability condition violated on axis " + std::to_string(axis) +
                " at substep " + std::to_string(substep) + ": dt*Q/step^2 = " +
                std::to_string(ratio) +
                " exceeds the limit (0.5 per axis, 1 summed over axes)"),
          axis_(axis),
          substep_(substep),
          ratio_(ratio) {}

    std::size_t axis() const noexcept { return axis_; }
    std::size_t substep() const noexcept { return substep_; }
    double ratio() const noexcept { return ratio_; }

private:
    std::size_t axis_;
    std::size_t substep_;
    double ratio_;
};

}  // namespace pmp
