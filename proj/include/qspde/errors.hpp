#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qspde {

/// A numerical procedure failed (root bracket lost, nonconvergence,
/// non-finite state). Precondition violations use std::invalid_argument.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
    NumericalError(const std::string& what, std::size_t step)
        : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step), has_step_(true) {}

    bool has_step() const { return has_step_; }
    std::size_t step() const { return step_; }

private:
    std::size_t step_ = 0;
    bool has_step_ = false;
};

}  // namespace qspde
