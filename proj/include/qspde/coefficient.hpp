#pragma once

#include "qspde/grid.hpp"

#include <functional>
#include <optional>
#include <string>

namespace qspde {

using ScalarFunction = std::function<double(double)>;

/**
 * A uniformly elliptic nonlinearity phi with c_minus <= phi' <= c_plus.
 *
 * The bounds are declared, not derived; check_ellipticity() samples them.
 */
class CoefficientFunction {
public:
    CoefficientFunction(ScalarFunction phi, ScalarFunction dphi, ScalarFunction d2phi,
                        double c_minus, double c_plus, std::string description);

    /// phi(v) = slope v + offset.
    static CoefficientFunction linear(double slope = 1.0, double offset = 0.0);
    /// phi(v) = v + amplitude sin(v) + offset, |amplitude| < 1.
    static CoefficientFunction sine(double amplitude, double offset = 0.0);

    double phi(double v) const { return phi_(v); }
    double dphi(double v) const { return dphi_(v); }
    double d2phi(double v) const { return d2phi_(v); }
    double c_minus() const { return c_minus_; }
    double c_plus() const { return c_plus_; }
    const std::string& description() const { return description_; }

    /**
     * phi^{-1}(y) by Newton's method safeguarded with bisection. The initial
     * bracket comes from the ellipticity bounds around phi(0); iteration stops
     * at machine precision. Throws NumericalError if the bracket is invalid
     * (declared bounds violated).
     */
    double inverse(double y, std::optional<double> guess = std::nullopt) const;

    GridFunction apply(const GridFunction& v) const;
    GridFunction apply_derivative(const GridFunction& v) const;
    GridFunction apply_inverse(const GridFunction& y) const;
    /// Pointwise inverse warm-started from `guess` (same grid).
    GridFunction apply_inverse(const GridFunction& y, const GridFunction& guess) const;

    /// Samples phi' on [-radius, radius]; true iff every sample lies in
    /// [c_minus, c_plus] up to a relative 1e-12.
    bool check_ellipticity(double radius, std::size_t samples = 10001) const;

private:
    ScalarFunction phi_;
    ScalarFunction dphi_;
    ScalarFunction d2phi_;
    double c_minus_;
    double c_plus_;
    std::string description_;
};

}  // namespace qspde
