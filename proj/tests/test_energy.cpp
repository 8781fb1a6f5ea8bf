#include <doctest.h>

#include "oracles.hpp"
#include "qspde/energy.hpp"
#include "qspde/stationary.hpp"

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <random>

using namespace qspde;
using oracle::pi;

namespace {

GridFunction random_trig(std::size_t n, std::mt19937_64& rng, int modes, double decay = 1.0) {
    std::normal_distribution<double> normal;
    std::vector<double> a(modes), b(modes);
    for (int k = 0; k < modes; ++k) {
        a[k] = normal(rng) / std::pow(1.0 + k, decay);
        b[k] = normal(rng) / std::pow(1.0 + k, decay);
    }
    const double c0 = normal(rng);
    return GridFunction::sample(n, [&](double x) {
        double s = c0;
        for (int k = 0; k < modes; ++k) {
            s += a[k] * std::cos(2 * pi * (k + 1) * x) + b[k] * std::sin(2 * pi * (k + 1) * x);
        }
        return s;
    });
}

GridFunction random_theta(std::size_t n, std::mt19937_64& rng) {
    return random_trig(n, rng, 6).map([](double v) { return std::exp(0.7 * v); });
}

GridFunction sine(std::size_t n) {
    return GridFunction::sample(n, [](double x) { return std::sin(2 * pi * x); });
}

}  // namespace

TEST_CASE("energy values") {
    const std::size_t n = 256;
    const GridFunction one = GridFunction::constant(n, 1.0);
    CHECK(energy(GridFunction::constant(n, 4.0), one) < 1e-20);
    CHECK(std::abs(energy(sine(n), one) - pi * pi) < 1e-10);
    const GridFunction theta = GridFunction::sample(n, [](double x) { return 1.0 + 0.5 * std::cos(2 * pi * x); });
    CHECK(std::abs(energy(sine(n), theta) - pi * pi) < 1e-10);
    const double oracle_value = 0.5 * oracle::quad(
        [](double x) { return 4 * pi * pi * std::pow(std::cos(2 * pi * x), 2) * (1.0 + 0.5 * std::cos(2 * pi * x)); },
        0.0, 1.0);
    CHECK(std::abs(energy(sine(n), theta) - oracle_value) < 1e-10);
    CHECK(energy(sine(n), one, Gradient::staggered) == doctest::Approx(pi * pi).epsilon(1e-4));

    std::mt19937_64 rng(12);
    for (int t = 0; t < 20; ++t) {
        const GridFunction f = random_trig(n, rng, 12);
        const GridFunction th = random_theta(n, rng);
        CHECK(energy(3.0 * f, th) == doctest::Approx(9.0 * energy(f, th)).epsilon(1e-12));
    }
}

TEST_CASE("energy gradient") {
    const std::size_t n = 256;
    const GridFunction one = GridFunction::constant(n, 1.0);
    CHECK(linf_norm(energy_gradient(GridFunction::constant(n, -2.0), one)) < 1e-12);
    CHECK(linf_norm(energy_gradient(sine(n), one) - 4 * pi * pi * sine(n)) < 1e-8);

    std::mt19937_64 rng(21);
    SUBCASE("integration by parts") {
        for (int t = 0; t < 50; ++t) {
            const GridFunction f = random_trig(n, rng, 10, 1.5);
            const GridFunction psi = random_trig(n, rng, 10, 1.5);
            const GridFunction theta = random_theta(n, rng);
            const double lhs = integrate(energy_gradient(f, theta) * psi * theta);
            const double rhs = integrate(differentiate(f) * differentiate(psi) * theta);
            CHECK(std::abs(lhs - rhs) < 1e-9 * std::max(1.0, std::abs(rhs)));
        }
    }
    SUBCASE("directional derivative converges at first order") {
        for (int t = 0; t < 10; ++t) {
            const GridFunction f = random_trig(n, rng, 8, 1.5);
            const GridFunction psi = random_trig(n, rng, 8, 1.5);
            const GridFunction theta = random_theta(n, rng);
            const double exact = integrate(energy_gradient(f, theta) * psi * theta);
            double prev = INFINITY;
            for (double h : {1e-1, 5e-2, 2.5e-2}) {
                const double fd = (energy(f + h * psi, theta) - energy(f, theta)) / h;
                const double err = std::abs(fd - exact);
                // Phi is quadratic, so the error is exactly h Phi(psi).
                CHECK(err == doctest::Approx(h * energy(psi, theta)).epsilon(1e-6));
                CHECK(err < prev);
                prev = err;
            }
        }
    }
}

TEST_CASE("Poincare constant") {
    CHECK(poincare_constant(GridFunction::constant(32, 1.0)) == 0.5);
    CHECK(poincare_constant(GridFunction::constant(32, 7.3)) == doctest::Approx(0.5).epsilon(1e-15));
    const auto eta = [](double x) { return std::sin(2 * pi * x) / (2 * pi); };
    const GridFunction theta = GridFunction::sample(512, [&](double x) { return std::exp(-eta(x)); });
    const double expect = 0.5 * oracle::quad([&](double x) { return std::exp(eta(x)); }, 0.0, 1.0) *
                          oracle::quad([&](double x) { return std::exp(-eta(x)); }, 0.0, 1.0);
    CHECK(std::abs(poincare_constant(theta) - expect) < 1e-10);
    CHECK(poincare_constant(theta) > 0.5);

    std::mt19937_64 rng(2);
    for (int t = 0; t < 100; ++t) CHECK(poincare_constant(random_theta(64, rng)) >= 0.5);
}

TEST_CASE("Poincare inequality") {
    const std::size_t n = 256;
    const GridFunction one = GridFunction::constant(n, 1.0);
    const PoincareCheck s = verify_poincare(sine(n), one);
    CHECK(std::abs(s.lhs - pi * pi) < 1e-9);
    CHECK(std::abs(s.rhs - 4 * std::pow(pi, 4)) < 1e-9);

    const PoincareCheck c = verify_poincare(GridFunction::constant(n, 3.0), one);
    CHECK(c.lhs < 1e-20);
    CHECK(c.rhs < 1e-20);

    std::mt19937_64 rng(99);
    int violations = 0;
    std::vector<GridFunction> thetas;
    for (int t = 0; t < 10; ++t) thetas.push_back(random_theta(128, rng));
    for (int i = 0; i < 1000; ++i) {
        const GridFunction f = random_trig(128, rng, 20);
        for (const auto& th : thetas) {
            const PoincareCheck p = verify_poincare(f, th);
            if (!(p.lhs <= p.rhs)) ++violations;
        }
    }
    CHECK(violations == 0);
}

TEST_CASE("decay rate bound") {
    const GridFunction flat = GridFunction::constant(64, 1.0);
    const CoefficientFunction lin = CoefficientFunction::linear();
    const DecayBound b = decay_rate_bound(lin, flat, 0.0);
    CHECK(b.C_theta == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(b.c_star_mu0 == doctest::Approx(2.0).epsilon(1e-15));

    std::mt19937_64 rng(5);
    const GridFunction theta = random_theta(128, rng);
    const CoefficientFunction s = CoefficientFunction::sine(0.3);
    const double mu_star = mu_smallness_threshold(s, theta);
    CHECK(std::abs(decay_rate_bound(s, theta, mu_star).C_theta) < 1e-12);
    CHECK(std::abs(decay_rate_bound(s, theta, -mu_star).C_theta) < 1e-12);
    double prev = -INFINITY;
    for (double mu : {0.0, 0.1, 0.2, 0.5, 1.0}) {
        const double c = decay_rate_bound(s, theta, mu).C_theta;
        CHECK(c > prev);
        prev = c;
    }

    const EnergyDiagnostics d = energy_diagnostics(sine(64), flat, lin, 0.0);
    CHECK(d.phi_value == doctest::Approx(pi * pi));
    CHECK(d.c2 == 0.5);
    CHECK(d.c_star == 2.0);
    CHECK(d.grad_norm_sq == doctest::Approx(8 * std::pow(pi, 4)));
}

TEST_CASE("norm equivalence constant") {
    CHECK(norm_equivalence_constant(GridFunction::constant(32, 2.0)) == 1.0);
    const double a = 0.8;
    const GridFunction theta = GridFunction::sample(256, [a](double x) { return std::exp(-a * std::sin(2 * pi * x)); });
    CHECK(norm_equivalence_constant(theta) == doctest::Approx(std::exp(a)).epsilon(1e-13));

    SUBCASE("bounds constrained deviations") {
        std::mt19937_64 rng(77);
        const ThetaResult r = build_theta(sample_bridge(6, 256, 128));
        const CoefficientFunction phi = CoefficientFunction::sine(0.5, 0.2);
        const double m = 0.4;
        const double z = solve_zm(phi, r.theta, m);
        const double C = norm_equivalence_constant(r.theta);
        int violations = 0;
        for (int t = 0; t < 100; ++t) {
            const GridFunction g = random_trig(256, rng, 12, 1.2);
            // Additive shift so that the mass of phi^{-1}(f theta) equals m.
            const auto gap = [&](double s) { return integrate(phi.apply_inverse((g + s) * r.theta)) - m; };
            double lo = -50.0, hi = 50.0;
            std::uintmax_t iters = 200;
            boost::math::tools::eps_tolerance<double> tol(50);
            const auto root = boost::math::tools::toms748_solve(gap, lo, hi, tol, iters);
            const GridFunction f = g + 0.5 * (root.first + root.second);
            const double lhs = l2_norm(f - z, r.theta);
            const double rhs = C * h1_seminorm(f, r.theta);
            if (!(lhs <= rhs)) ++violations;
        }
        CHECK(violations == 0);
    }
}
