#pragma once

#include "qspde/coefficient.hpp"
#include "qspde/grid.hpp"
#include "qspde/noise.hpp"

#include <map>
#include <mutex>

namespace qspde {

struct ThetaResult {
    GridFunction theta;
    double mu;
};

/**
 * theta(x) = e^{-eta(x)} (mu int_0^x e^{eta} + 1), mu = (e^{sigma} - 1) / int_0^1 e^{eta}.
 *
 * The cumulative integral is taken of e^{sigma y} times the trigonometric
 * interpolant of e^{eta_periodic}, mode by mode in closed form. This is exact
 * for constant noise and spectrally accurate for smooth noise; for sigma = 0
 * the total integral reduces to the rectangle rule and mu is exactly 0.
 *
 * Throws NumericalError if max |eta| > 300 (e^eta would overflow downstream).
 */
ThetaResult build_theta(const NoiseSample& noise);

/// sup |theta' + xi theta - mu| with a spectral derivative.
double residual_theta(const GridFunction& theta, double mu, const GridFunction& xi);

/// z with integrate(phi^{-1}(z theta)) = m. The map is strictly increasing;
/// the bracket is expanded geometrically and refined with TOMS 748.
/// Throws NumericalError if no bracket is found or the final residual
/// exceeds tol * max(1, |m|).
double solve_zm(const CoefficientFunction& coeff, const GridFunction& theta, double m, double tol = 1e-10);

/// v_bar = phi^{-1}(z theta) pointwise.
GridFunction stationary_profile(const CoefficientFunction& coeff, const GridFunction& theta, double z);

/**
 * Solution of theta' + psi(theta) xi = 0 with psi = chi o phi^{-1}:
 * theta_C = Psi^{-1}(C - eta), Psi(t) = int_1^t ds / psi(s).
 *
 * Psi uses adaptive Gauss-Kronrod quadrature and is inverted pointwise by a
 * bracketed root find. Requires sigma = 0; throws std::invalid_argument if
 * psi is not positive on the range needed.
 */
GridFunction separable_stationary(const CoefficientFunction& coeff, const ScalarFunction& chi,
                                  const NoiseSample& noise, double C);

/// mu* = c_minus / (c1 sqrt(c2)), the |mu| at which the decay bound C(theta)
/// changes sign.
double mu_smallness_threshold(const CoefficientFunction& coeff, const GridFunction& theta);

/// theta and mu for one noise sample, with a thread-safe cache of z_m and
/// v_bar_m per queried mass.
class StationaryProfile {
public:
    struct Entry {
        double z;
        GridFunction v_bar;
    };

    StationaryProfile(CoefficientFunction coeff, ThetaResult theta);

    const GridFunction& theta() const { return theta_; }
    double mu() const { return mu_; }
    const CoefficientFunction& coeff() const { return coeff_; }

    Entry for_mass(double m) const;

private:
    CoefficientFunction coeff_;
    GridFunction theta_;
    double mu_;
    mutable std::mutex mutex_;
    mutable std::map<double, Entry> cache_;
};

}  // namespace qspde
