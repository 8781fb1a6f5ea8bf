#pragma once

#include "qspde/coefficient.hpp"
#include "qspde/grid.hpp"

namespace qspde {

/// Phi(f) = 1/2 int (f')^2 theta. The staggered variant matches the
/// finite-volume solver: 1/2 sum theta_{j+1/2} (D+ f)_j^2 dx.
double energy(const GridFunction& f, const GridFunction& theta, Gradient grad = Gradient::spectral);

/// DPhi(f) = -theta^{-1} (theta f')', two spectral derivatives.
GridFunction energy_gradient(const GridFunction& f, const GridFunction& theta);

/// c2(theta) = 1/2 int theta^{-1} int theta. Always >= 1/2.
double poincare_constant(const GridFunction& theta);

struct PoincareCheck {
    double lhs;  ///< Phi(f)
    double rhs;  ///< c2(theta) ||DPhi(f)||^2 in L2_theta
};
PoincareCheck verify_poincare(const GridFunction& f, const GridFunction& theta);

/// Constants of the energy estimate, all from grid values of theta.
struct EnergyConstants {
    double c_of_theta;  ///< (min theta)^{-2}
    double c1;          ///< c_plus sqrt(2 c(theta))
    double c2;          ///< poincare_constant(theta)
};
EnergyConstants energy_constants(const CoefficientFunction& coeff, const GridFunction& theta);

struct DecayBound {
    double C_theta;     ///< -c_minus/(2 c2) + mu^2 c1^2/(2 c_minus)
    double c_star_mu0;  ///< c_minus / c2, the rate available when mu = 0
};
DecayBound decay_rate_bound(const CoefficientFunction& coeff, const GridFunction& theta, double mu);

/// sqrt(max theta / min theta): bounds ||f - z_m||_{L2_theta} by
/// ||f'||_{L2_theta} for f obeying the mass constraint.
double norm_equivalence_constant(const GridFunction& theta);

struct EnergyDiagnostics {
    double phi_value;
    double grad_norm_sq;
    double c1;
    double c2;
    double c_of_theta;
    double C_theta;
    double c_star;  ///< -C_theta when negative; c_minus/c2 when mu = 0; else 0
};
EnergyDiagnostics energy_diagnostics(const GridFunction& f, const GridFunction& theta,
                                     const CoefficientFunction& coeff, double mu);

}  // namespace qspde
