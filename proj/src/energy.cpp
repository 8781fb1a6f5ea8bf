#include "qspde/energy.hpp"

#include <cmath>

namespace qspde {

double energy(const GridFunction& f, const GridFunction& theta, Gradient grad) {
    const double s = h1_seminorm(f, theta, grad);
    return 0.5 * s * s;
}

GridFunction energy_gradient(const GridFunction& f, const GridFunction& theta) {
    require_same_grid(f, theta, "energy_gradient");
    require_positive(theta, "energy_gradient");
    return -(differentiate(theta * differentiate(f)) / theta);
}

double poincare_constant(const GridFunction& theta) {
    require_positive(theta, "poincare_constant");
    const GridFunction inv = theta.map([](double t) { return 1.0 / t; });
    return 0.5 * integrate(inv) * integrate(theta);
}

PoincareCheck verify_poincare(const GridFunction& f, const GridFunction& theta) {
    const GridFunction g = energy_gradient(f, theta);
    return {energy(f, theta), poincare_constant(theta) * integrate(g * g * theta)};
}

EnergyConstants energy_constants(const CoefficientFunction& coeff, const GridFunction& theta) {
    require_positive(theta, "energy_constants");
    const double tmin = theta.min();
    const double c = 1.0 / (tmin * tmin);
    return {c, coeff.c_plus() * std::sqrt(2.0 * c), poincare_constant(theta)};
}

DecayBound decay_rate_bound(const CoefficientFunction& coeff, const GridFunction& theta, double mu) {
    const EnergyConstants k = energy_constants(coeff, theta);
    const double cm = coeff.c_minus();
    return {-cm / (2.0 * k.c2) + mu * mu * k.c1 * k.c1 / (2.0 * cm), cm / k.c2};
}

double norm_equivalence_constant(const GridFunction& theta) {
    require_positive(theta, "norm_equivalence_constant");
    return std::sqrt(theta.max() / theta.min());
}

EnergyDiagnostics energy_diagnostics(const GridFunction& f, const GridFunction& theta,
                                     const CoefficientFunction& coeff, double mu) {
    const EnergyConstants k = energy_constants(coeff, theta);
    const DecayBound b = decay_rate_bound(coeff, theta, mu);
    const GridFunction g = energy_gradient(f, theta);
    double c_star = 0.0;
    if (mu == 0.0) {
        c_star = b.c_star_mu0;
    } else if (b.C_theta < 0.0) {
        c_star = -b.C_theta;
    }
    return {energy(f, theta), integrate(g * g * theta), k.c1, k.c2, k.c_of_theta, b.C_theta, c_star};
}

}  // namespace qspde
