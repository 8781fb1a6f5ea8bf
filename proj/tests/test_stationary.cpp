#include <doctest.h>

#include "oracles.hpp"
#include "qspde/energy.hpp"
#include "qspde/errors.hpp"
#include "qspde/stationary.hpp"

#include <cmath>
#include <random>
#include <thread>

using namespace qspde;
using oracle::pi;

namespace {

NoiseSample smooth_noise(std::size_t n, double amplitude, double sigma) {
    const GridFunction eta = GridFunction::sample(n, [=](double x) {
        return amplitude * std::sin(2 * pi * x) + 0.5 * amplitude * (std::cos(4 * pi * x) - 1.0) + sigma * x;
    });
    return noise_from_eta(eta, sigma);
}

}  // namespace

TEST_CASE("build_theta closed forms") {
    SUBCASE("zero noise") {
        const ThetaResult r = build_theta(zero_noise(64));
        CHECK(r.mu == 0.0);
        CHECK(linf_norm(r.theta - 1.0) == 0.0);
    }
    SUBCASE("constant noise gives flat theta and mu = sigma") {
        for (double sigma : {0.5, 1.0, 2.0, -1.5}) {
            const ThetaResult r = build_theta(with_drift(zero_noise(1024), sigma));
            CHECK(linf_norm(r.theta - 1.0) < 1e-12);
            CHECK(std::abs(r.mu - sigma) < 1e-12);
        }
    }
    SUBCASE("sigma = 0 reduces to e^{-eta}") {
        const GridFunction eta = GridFunction::sample(1024, [](double x) { return std::sin(2 * pi * x) / (2 * pi); });
        const ThetaResult r = build_theta(noise_from_eta(eta, 0.0));
        CHECK(r.mu == 0.0);
        CHECK(linf_norm(r.theta - eta.map([](double e) { return std::exp(-e); })) < 1e-10);
        CHECK(r.theta[0] == 1.0);
    }
    SUBCASE("general smooth noise against adaptive quadrature") {
        const double a = 0.3, sigma = 0.7;
        const auto eta = [=](double x) {
            return a * std::sin(2 * pi * x) + 0.5 * a * (std::cos(4 * pi * x) - 1.0) + sigma * x;
        };
        const auto ee = [&](double y) { return std::exp(eta(y)); };
        const double mu = (std::exp(sigma) - 1.0) / oracle::quad(ee, 0.0, 1.0);
        const ThetaResult r = build_theta(smooth_noise(256, a, sigma));
        CHECK(std::abs(r.mu - mu) < 1e-12);
        for (std::size_t j = 0; j < 256; j += 7) {
            const double x = static_cast<double>(j) / 256;
            const double expect = std::exp(-eta(x)) * (mu * oracle::quad(ee, 0.0, x) + 1.0);
            CHECK(std::abs(r.theta[j] - expect) < 1e-12);
        }
    }
    SUBCASE("refinement consistency at shared nodes") {
        const ThetaResult coarse = build_theta(smooth_noise(128, 0.4, -0.6));
        const ThetaResult fine = build_theta(smooth_noise(256, 0.4, -0.6));
        double gap = 0.0;
        for (std::size_t j = 0; j < 128; ++j) gap = std::max(gap, std::abs(coarse.theta[j] - fine.theta[2 * j]));
        CHECK(gap < 1.0 / (128.0 * 128.0));
        CHECK(gap < 1e-12);
    }
    SUBCASE("overflow guard") {
        CHECK_THROWS_AS(build_theta(with_drift(zero_noise(16), 400.0)), NumericalError);
    }
}

TEST_CASE("build_theta over many samples") {
    int nonpositive = 0;
    double worst_mu = 0.0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const NoiseSample s = sample_bridge(seed, 256, 128);
        const ThetaResult r = build_theta(s);
        if (!(r.theta.min() > 0.0)) ++nonpositive;
        worst_mu = std::max(worst_mu, std::abs(r.mu));
        if (seed % 10 == 0) {
            const ThetaResult d = build_theta(with_drift(s, 0.5 - 0.001 * static_cast<double>(seed)));
            if (!(d.theta.min() > 0.0)) ++nonpositive;
        }
    }
    CHECK(nonpositive == 0);
    CHECK(worst_mu <= 1e-12);
}

TEST_CASE("residual of the defining identity") {
    SUBCASE("constant case") {
        const GridFunction one = GridFunction::constant(64, 1.0);
        CHECK(residual_theta(one, 0.7, GridFunction::constant(64, 0.7)) < 1e-12);
    }
    SUBCASE("mollified single mode, sigma = 0") {
        const std::vector<double> z{1.0};
        const NoiseSample s = mollify(bridge_from_coefficients(512, z), 1e-3);
        const ThetaResult r = build_theta(s);
        CHECK(r.mu == 0.0);
        CHECK(residual_theta(r.theta, r.mu, mollified_xi(s, 0.0)) < 1e-8);
    }
    SUBCASE("raw theta against mollified noise improves as eps shrinks") {
        const std::vector<double> z{1.0, -0.5, 0.25};
        const NoiseSample raw = bridge_from_coefficients(1024, z);
        const ThetaResult r = build_theta(raw);
        double prev = INFINITY;
        for (double eps : {1e-2, 1e-3, 1e-4}) {
            const double res = residual_theta(r.theta, r.mu, mollified_xi(raw, eps));
            CHECK(res < prev);
            prev = res;
        }
    }
    CHECK_THROWS_AS(residual_theta(GridFunction::constant(16, 1.0), 0.0, GridFunction::constant(32, 0.0)),
                    std::invalid_argument);
}

TEST_CASE("solve_zm and stationary profiles") {
    const std::size_t n = 256;
    const GridFunction flat = GridFunction::constant(n, 1.0);
    const ThetaResult bridge = build_theta(sample_bridge(31, n, 128));
    const CoefficientFunction lin = CoefficientFunction::linear();
    const CoefficientFunction sine = CoefficientFunction::sine(0.5);

    CHECK(solve_zm(lin, flat, 0.7) == doctest::Approx(0.7).epsilon(1e-14));
    CHECK(linf_norm(stationary_profile(lin, flat, 0.7) - 0.7) < 1e-14);

    for (double m : {-1.0, 0.0, 0.3, 2.0}) {
        const double z = solve_zm(lin, bridge.theta, m);
        CHECK(std::abs(z - m / integrate(bridge.theta)) < 1e-10);
        const GridFunction vbar = stationary_profile(lin, bridge.theta, z);
        CHECK(linf_norm(vbar - bridge.theta * (m / integrate(bridge.theta))) < 1e-10);
        CHECK(std::abs(integrate(vbar) - m) < 1e-10);
    }

    CHECK(std::abs(solve_zm(sine, flat, 1.0) - (1.0 + 0.5 * std::sin(1.0))) < 1e-10);
    CHECK(std::abs(solve_zm(sine, flat, 1.0) - 1.4207) < 1e-4);

    SUBCASE("round trip and strict monotonicity") {
        double prev_z = -INFINITY;
        for (double m : {-1.0, 0.0, 0.5, 2.0}) {
            const double z = solve_zm(sine, bridge.theta, m);
            CHECK(z > prev_z);
            prev_z = z;
            CHECK(std::abs(integrate(stationary_profile(sine, bridge.theta, z)) - m) < 1e-8);
        }
    }
    SUBCASE("cached profile is consistent across threads") {
        const StationaryProfile profile(sine, bridge);
        std::vector<double> zs(4);
        std::vector<std::thread> pool;
        for (int t = 0; t < 4; ++t) pool.emplace_back([&, t] { zs[t] = profile.for_mass(0.5).z; });
        for (auto& th : pool) th.join();
        for (double z : zs) CHECK(z == zs[0]);
        CHECK(std::abs(integrate(profile.for_mass(0.5).v_bar) - 0.5) < 1e-10);
    }
}

TEST_CASE("separable stationary solutions") {
    const std::size_t n = 128;
    const CoefficientFunction lin = CoefficientFunction::linear();

    SUBCASE("chi = phi reduces to z e^{-eta}") {
        const NoiseSample s = sample_bridge(4, n, 64);
        const double C = 0.3;
        const GridFunction t = separable_stationary(lin, [](double v) { return v; }, s, C);
        const GridFunction expect = s.eta().map([C](double e) { return std::exp(C - e); });
        CHECK(linf_norm(t - expect) < 1e-12);
        const ThetaResult r = build_theta(s);
        CHECK(linf_norm(t - r.theta * std::exp(C)) < 1e-12);
    }
    SUBCASE("flat noise gives a constant") {
        const auto chi = [&](double v) { return 1.0 + v * v; };
        const GridFunction t = separable_stationary(lin, chi, zero_noise(n), 0.4);
        CHECK(linf_norm(t - std::tan(0.4 + pi / 4)) < 1e-12);
    }
    SUBCASE("mollified noise satisfies the separable equation") {
        const auto chi = [&](double v) { return 1.0 + v * v; };
        for (double eps : {1e-2, 1e-3}) {
            const NoiseSample s = mollify(sample_bridge(8, 512, 256), eps);
            const GridFunction t = separable_stationary(lin, chi, s, 0.0);
            const GridFunction psi = t.map([](double v) { return 1.0 + v * v; });
            const double res = linf_norm(differentiate(t) + psi * mollified_xi(s, 0.0));
            CHECK(res < 1e-8);
        }
    }
    SUBCASE("rejections") {
        CHECK_THROWS_AS(separable_stationary(lin, [](double v) { return v; }, with_drift(zero_noise(n), 0.1), 0.0),
                        std::invalid_argument);
        // Psi for psi = 1 + t^2 is bounded above by pi/4, so C = 2 is unreachable.
        CHECK_THROWS_AS(separable_stationary(lin, [](double v) { return 1.0 + v * v; }, zero_noise(n), 2.0),
                        std::invalid_argument);
        CHECK_THROWS_AS(separable_stationary(lin, [](double v) { return v - 2.0; }, zero_noise(n), 0.1),
                        std::invalid_argument);
    }
}

TEST_CASE("mu smallness threshold") {
    const GridFunction flat = GridFunction::constant(64, 1.0);
    CHECK(mu_smallness_threshold(CoefficientFunction::linear(), flat) == doctest::Approx(1.0).epsilon(1e-15));

    const auto declared = [](double cm, double cp) {
        return CoefficientFunction([](double v) { return v; }, [](double) { return 1.0; }, [](double) { return 0.0; },
                                   cm, cp, "declared");
    };
    const ThetaResult r = build_theta(smooth_noise(256, 0.3, 0.0));
    const double base = mu_smallness_threshold(declared(0.4, 1.0), r.theta);
    CHECK(mu_smallness_threshold(declared(0.8, 1.0), r.theta) == doctest::Approx(2 * base).epsilon(1e-14));

    const std::vector<double> z{1.0};
    const ThetaResult single = build_theta(bridge_from_coefficients(256, z));
    const CoefficientFunction sine = CoefficientFunction::sine(0.5);
    const double mu_star = mu_smallness_threshold(sine, single.theta);
    CHECK(decay_rate_bound(sine, single.theta, 0.99 * mu_star).C_theta < 0.0);
    CHECK(decay_rate_bound(sine, single.theta, 1.01 * mu_star).C_theta > 0.0);
}
