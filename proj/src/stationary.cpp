#include "qspde/stationary.hpp"

#include "fft.hpp"
#include "qspde/energy.hpp"
#include "qspde/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace qspde {
namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

// Expands [z - s, z + s] until f changes sign; f is increasing.
template <typename F>
std::pair<double, double> expand_bracket(F&& f, double center, const char* what) {
    double s = 1.0 + std::abs(center);
    for (int it = 0; it < 200; ++it) {
        const double a = center - s;
        const double b = center + s;
        if (f(a) <= 0.0 && f(b) >= 0.0) return {a, b};
        s *= 2.0;
        if (!std::isfinite(s)) break;
    }
    throw NumericalError(std::string(what) + ": bracket expansion failed");
}

template <typename F>
double toms748(F&& f, double a, double b) {
    std::uintmax_t max_iter = 200;
    boost::math::tools::eps_tolerance<double> tol(std::numeric_limits<double>::digits - 2);
    const double fa = f(a);
    const double fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    const auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, max_iter);
    return 0.5 * (r.first + r.second);
}

}  // namespace

ThetaResult build_theta(const NoiseSample& noise) {
    const GridFunction eta = noise.eta();
    if (linf_norm(eta) > 300.0) {
        throw NumericalError("build_theta: max |eta| = " + format_double(linf_norm(eta)) +
                             " exceeds 300; e^eta would overflow");
    }
    const std::size_t n = noise.size();
    const double sigma = noise.sigma();
    const GridFunction p = noise.periodic().map([](double v) { return std::exp(v); });

    // int_0^x e^{sigma y} p(y) dy = e^{sigma x} S(x) - S(0) with
    // S_k = p_k / (sigma + 2 pi i k); for sigma = 0 the mean mode adds p_0 x.
    fft::Spectrum c = fft::forward(p.values());
    const double p0 = c[0].real() / static_cast<double>(n);
    for (std::size_t k = 0; k < c.size(); ++k) {
        const double w = two_pi * static_cast<double>(k);
        if (k == 0) {
            c[k] = sigma == 0.0 ? 0.0 : c[k] / sigma;
        } else if (fft::is_nyquist(k, n)) {
            // Interpolant term p_N cos(w x); its integral against e^{sigma y}
            // has sin(w x_j) = 0 at the nodes.
            c[k] = c[k].real() * sigma / (sigma * sigma + w * w);
        } else {
            c[k] /= std::complex<double>(sigma, w);
        }
    }
    const std::vector<double> s = fft::inverse(c, n);

    std::vector<double> cumulative(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double x = p.x(j);
        cumulative[j] = std::exp(sigma * x) * s[j] - s[0];
        if (sigma == 0.0) cumulative[j] += p0 * x;
    }
    cumulative[0] = 0.0;

    double mu = 0.0;
    if (sigma != 0.0) {
        // Total integral (e^sigma - 1) S(0), so mu = 1/S(0).
        mu = 1.0 / s[0];
    }
    std::vector<double> theta(n);
    for (std::size_t j = 0; j < n; ++j) theta[j] = std::exp(-eta[j]) * (mu * cumulative[j] + 1.0);
    GridFunction result(std::move(theta));
    require_positive(result, "build_theta");
    return {std::move(result), mu};
}

double residual_theta(const GridFunction& theta, double mu, const GridFunction& xi) {
    require_same_grid(theta, xi, "residual_theta");
    return linf_norm(differentiate(theta) + xi * theta - mu);
}

double solve_zm(const CoefficientFunction& coeff, const GridFunction& theta, double m, double tol) {
    require_positive(theta, "solve_zm");
    const auto mass_gap = [&](double z) { return integrate(coeff.apply_inverse(theta * z)) - m; };
    // For flat theta the root is phi(m); scale by the mean of theta as a start.
    const double center = coeff.phi(m) / integrate(theta);
    const auto [a, b] = expand_bracket(mass_gap, center, "solve_zm");
    const double z = toms748(mass_gap, a, b);
    const double gap = std::abs(mass_gap(z));
    if (!(gap <= tol * std::max(1.0, std::abs(m)))) {
        throw NumericalError("solve_zm: residual " + format_double(gap) + " above tolerance for m = " + format_double(m));
    }
    return z;
}

GridFunction stationary_profile(const CoefficientFunction& coeff, const GridFunction& theta, double z) {
    require_positive(theta, "stationary_profile");
    return coeff.apply_inverse(theta * z);
}

GridFunction separable_stationary(const CoefficientFunction& coeff, const ScalarFunction& chi,
                                  const NoiseSample& noise, double C) {
    if (noise.sigma() != 0.0) {
        throw std::invalid_argument("separable_stationary: requires sigma = 0 (mu = 0), got sigma = " +
                                    format_double(noise.sigma()));
    }
    const auto psi = [&](double t) { return chi(coeff.inverse(t)); };
    const auto require_psi = [&](double t) {
        const double v = psi(t);
        if (!(v > 0.0)) {
            throw std::invalid_argument("separable_stationary: psi(" + format_double(t) + ") = " + format_double(v) +
                                        " is not positive on the needed range");
        }
    };
    // Integral of 1/psi between two points; psi is smooth where positive.
    const auto segment = [&](double a, double b) {
        if (a == b) return 0.0;
        return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            [&](double s) { return 1.0 / psi(s); }, a, b, 12, 1e-14);
    };
    require_psi(1.0);
    constexpr double reach = 1e12;

    const GridFunction eta = noise.eta();
    std::vector<double> out(eta.size());
    for (std::size_t j = 0; j < out.size(); ++j) {
        const double target = C - eta[j];
        if (target == 0.0) {
            out[j] = 1.0;
            continue;
        }
        // Walk away from t = 1 until Psi passes the target, accumulating Psi
        // segment by segment; on the way down, halve the step whenever psi
        // stops being positive.
        const double dir = target > 0.0 ? 1.0 : -1.0;
        double inner = 1.0;
        double psi_inner = 0.0;
        double outer = 1.0;
        double step = 1.0;
        bool found = false;
        for (int it = 0; it < 2000 && !found; ++it) {
            const double cand = inner + dir * step;
            if (std::abs(cand) > reach) break;
            if (!(psi(cand) > 0.0)) {
                step *= 0.5;
                if (step < 1e-15 * (1.0 + std::abs(inner))) break;
                continue;
            }
            const double psi_cand = psi_inner + segment(inner, cand);
            if (dir * (psi_cand - target) >= 0.0) {
                outer = cand;
                found = true;
            } else {
                inner = cand;
                psi_inner = psi_cand;
                step *= 2.0;
            }
        }
        if (!found) {
            throw std::invalid_argument("separable_stationary: Psi does not reach " + format_double(target) +
                                        " while psi stays positive");
        }
        const auto gap = [&](double t) { return psi_inner + segment(inner, t) - target; };
        out[j] = toms748(gap, std::min(inner, outer), std::max(inner, outer));
        require_psi(out[j]);
    }
    return GridFunction(std::move(out));
}

double mu_smallness_threshold(const CoefficientFunction& coeff, const GridFunction& theta) {
    const EnergyConstants k = energy_constants(coeff, theta);
    return coeff.c_minus() / (k.c1 * std::sqrt(k.c2));
}

StationaryProfile::StationaryProfile(CoefficientFunction coeff, ThetaResult theta)
    : coeff_(std::move(coeff)), theta_(std::move(theta.theta)), mu_(theta.mu) {
    require_positive(theta_, "StationaryProfile");
}

StationaryProfile::Entry StationaryProfile::for_mass(double m) const {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(m);
    if (it == cache_.end()) {
        const double z = solve_zm(coeff_, theta_, m);
        it = cache_.emplace(m, Entry{z, stationary_profile(coeff_, theta_, z)}).first;
    }
    return it->second;
}

}  // namespace qspde
