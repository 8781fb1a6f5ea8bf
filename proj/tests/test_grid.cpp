#include <doctest.h>

#include "oracles.hpp"
#include "qspde/grid.hpp"

#include <bit>
#include <cmath>
#include <random>
#include <sstream>

using namespace qspde;
using oracle::pi;

namespace {

GridFunction sine(std::size_t n, double k = 1.0) {
    return GridFunction::sample(n, [k](double x) { return std::sin(2 * pi * k * x); });
}

GridFunction random_trig(std::size_t n, std::mt19937_64& rng, int modes) {
    std::normal_distribution<double> normal;
    std::vector<double> a(modes), b(modes);
    for (int k = 0; k < modes; ++k) {
        a[k] = normal(rng) / (1 + k);
        b[k] = normal(rng) / (1 + k);
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

}  // namespace

TEST_CASE("grid function invariants") {
    CHECK_THROWS_AS(GridFunction(std::vector<double>(7, 0.0)), std::invalid_argument);
    CHECK_THROWS_AS(GridFunction(std::vector<double>{0, 1, 2, NAN, 4, 5, 6, 7}), std::invalid_argument);
    CHECK_THROWS_AS(GridFunction(std::vector<double>{0, 1, 2, INFINITY, 4, 5, 6, 7}), std::invalid_argument);

    const GridFunction g = sine(16);
    CHECK(g.wrap(-1) == g[15]);
    CHECK(g.wrap(16) == g[0]);
    CHECK(g.wrap(35) == g[3]);
    CHECK(g.x(4) == 0.25);
    CHECK_THROWS_AS(g + sine(32), std::invalid_argument);
}

TEST_CASE("differentiate") {
    const std::size_t n = 256;
    SUBCASE("constant") {
        const GridFunction d = differentiate(GridFunction::constant(n, 3.5));
        CHECK(linf_norm(d) < 1e-12);
    }
    SUBCASE("sine first and second derivative") {
        const GridFunction g = sine(n);
        const GridFunction d1_exact = GridFunction::sample(n, [](double x) { return 2 * pi * std::cos(2 * pi * x); });
        const GridFunction d2_exact = GridFunction::sample(n, [](double x) { return -4 * pi * pi * std::sin(2 * pi * x); });
        CHECK(linf_norm(differentiate(g, 1) - d1_exact) < 1e-10);
        CHECK(linf_norm(differentiate(g, 2) - d2_exact) < 1e-8);
    }
    SUBCASE("central differences are second order") {
        const GridFunction d1_exact = GridFunction::sample(n, [](double x) { return 2 * pi * std::cos(2 * pi * x); });
        const double e1 = linf_norm(differentiate(sine(n), 1, DiffMethod::central) - d1_exact);
        const GridFunction d1_fine = GridFunction::sample(2 * n, [](double x) { return 2 * pi * std::cos(2 * pi * x); });
        const double e2 = linf_norm(differentiate(sine(2 * n), 1, DiffMethod::central) - d1_fine);
        CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.01));
    }
    SUBCASE("agrees with brute-force DFT multiplier on random data") {
        std::mt19937_64 rng(11);
        std::normal_distribution<double> normal;
        std::vector<double> v(64);
        for (double& x : v) x = normal(rng);
        const auto c = oracle::dft(v);
        const auto d1 = oracle::synthesize(c, [](long k) {
            return std::abs(k) == 32 ? std::complex<double>(0.0) : std::complex<double>(0.0, 2 * pi * k);
        });
        const auto d2 = oracle::synthesize(c, [](long k) { return std::complex<double>(-4 * pi * pi * k * k); });
        const GridFunction g(v);
        CHECK(oracle::max_abs_diff(differentiate(g, 1).vector(), d1) < 1e-9);
        CHECK(oracle::max_abs_diff(differentiate(g, 2).vector(), d2) < 1e-7);
    }
    SUBCASE("linear, annihilates constants, zero integral") {
        std::mt19937_64 rng(3);
        for (int trial = 0; trial < 20; ++trial) {
            const GridFunction a = random_trig(128, rng, 10);
            const GridFunction b = random_trig(128, rng, 10);
            const GridFunction lhs = differentiate(2.0 * a + b + 7.0);
            const GridFunction rhs = 2.0 * differentiate(a) + differentiate(b);
            CHECK(linf_norm(lhs - rhs) < 1e-10);
            CHECK(std::abs(integrate(differentiate(a))) < 1e-12);
        }
    }
    CHECK_THROWS_AS(differentiate(sine(16), 0), std::invalid_argument);
    CHECK_THROWS_AS(differentiate(sine(16), 3, DiffMethod::central), std::invalid_argument);
}

TEST_CASE("staggered operators") {
    const std::size_t n = 512;
    const GridFunction g = sine(n);
    const GridFunction half = GridFunction::sample(n, [n](double x) { return std::sin(2 * pi * (x + 0.5 / n)); });
    CHECK(linf_norm(spectral_half_shift(g) - half) < 1e-12);
    CHECK(linf_norm(half_node_average(g) - half) < 5e-5);
    const GridFunction dhalf = GridFunction::sample(n, [n](double x) { return 2 * pi * std::cos(2 * pi * (x + 0.5 / n)); });
    CHECK(linf_norm(forward_difference(g) - dhalf) < 1e-3);
    std::mt19937_64 rng(1);
    CHECK(std::abs(integrate(forward_difference(random_trig(64, rng, 5)))) < 1e-12);
}

TEST_CASE("integrate") {
    CHECK(integrate(GridFunction::constant(32, 3.0)) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(std::abs(integrate(sine(64))) < 1e-14);
    const double ref = oracle::quad([](double x) { return std::exp(std::sin(2 * pi * x)); }, 0.0, 1.0);
    const GridFunction g = GridFunction::sample(1024, [](double x) { return std::exp(std::sin(2 * pi * x)); });
    CHECK(std::abs(integrate(g) - ref) < 1e-10);
}

TEST_CASE("antiderivative") {
    const std::size_t n = 128;
    SUBCASE("mean plus periodic part") {
        const GridFunction g = GridFunction::sample(n, [](double x) { return 0.3 + std::cos(2 * pi * x); });
        const GridFunction exact = GridFunction::sample(n, [](double x) { return 0.3 * x + std::sin(2 * pi * x) / (2 * pi); });
        const GridFunction a = antiderivative(g);
        CHECK(a[0] == 0.0);
        CHECK(linf_norm(a - exact) < 1e-13);
    }
    SUBCASE("agrees with adaptive quadrature") {
        const auto f = [](double x) { return std::exp(std::sin(2 * pi * x)); };
        const GridFunction a = antiderivative(GridFunction::sample(n, f));
        for (std::size_t j : {5u, 37u, 64u, 100u}) {
            CHECK(std::abs(a[j] - oracle::quad(f, 0.0, static_cast<double>(j) / n)) < 1e-12);
        }
    }
}

TEST_CASE("heat smoothing") {
    const std::size_t n = 64;
    const double eps = 0.01;
    const GridFunction g = sine(n, 3) + 2.0;
    const GridFunction exact = GridFunction::sample(n, [eps](double x) {
        return 2.0 + std::exp(-eps * 36 * pi * pi) * std::sin(6 * pi * x);
    });
    CHECK(linf_norm(heat_smooth(g, eps) - exact) < 1e-14);
    CHECK(heat_smooth(g, 0.0) == g);
    CHECK_THROWS_AS(heat_smooth(g, -1e-3), std::invalid_argument);
    const GridFunction twice = heat_smooth(heat_smooth(g, eps), eps);
    CHECK(linf_norm(twice - heat_smooth(g, 2 * eps)) < 1e-14);
}

TEST_CASE("norms") {
    const std::size_t n = 256;
    const GridFunction s = sine(n);
    const GridFunction one = GridFunction::constant(n, 1.0);
    const GridFunction theta = GridFunction::sample(n, [](double x) { return 1.0 + 0.5 * std::cos(2 * pi * x); });

    CHECK(std::abs(norm(s, norm_kind::L2{}) - 1.0 / std::sqrt(2.0)) < 1e-12);
    CHECK(norm(s, norm_kind::L2Weighted{&one}) == norm(s, norm_kind::L2{}));
    CHECK(norm(s, norm_kind::Linf{}) == doctest::Approx(1.0));

    SUBCASE("constants") {
        const GridFunction c = GridFunction::constant(n, -2.0);
        CHECK(h1_seminorm(c, theta) < 1e-12);
        CHECK(h1_seminorm(c, theta, Gradient::staggered) == 0.0);
        CHECK(norm(c, norm_kind::L2Weighted{&theta}) == doctest::Approx(2.0 * std::sqrt(integrate(theta))).epsilon(1e-14));
    }
    SUBCASE("H1 of sine") {
        const double exact = std::sqrt(0.5 + 0.5 * 4 * pi * pi);
        CHECK(norm(s, norm_kind::H1{}) == doctest::Approx(exact).epsilon(1e-12));
        CHECK(norm(s, norm_kind::H1Weighted{&one}) == doctest::Approx(exact).epsilon(1e-12));
        CHECK(h1_norm(s, Gradient::staggered) == doctest::Approx(exact).epsilon(1e-4));
    }
    SUBCASE("Parseval") {
        std::mt19937_64 rng(5);
        for (int trial = 0; trial < 20; ++trial) {
            const GridFunction g = random_trig(n, rng, 40);
            CHECK(std::abs(l2_norm(g) - spectral_l2_norm(g)) < 1e-10);
        }
        std::vector<double> odd(63);
        std::normal_distribution<double> normal;
        for (double& v : odd) v = normal(rng);
        CHECK(std::abs(l2_norm(GridFunction(odd)) - spectral_l2_norm(GridFunction(odd))) < 1e-12);
    }
    SUBCASE("weights must be positive") {
        const GridFunction bad = theta - 0.6;
        CHECK_THROWS_AS(norm(s, norm_kind::L2Weighted{&bad}), std::invalid_argument);
        CHECK_THROWS_AS(norm(s, norm_kind::H1Weighted{&bad}), std::invalid_argument);
        CHECK_THROWS_AS(norm(s, norm_kind::Holder{1.0}), std::invalid_argument);
    }
}

TEST_CASE("Hoelder estimator") {
    SUBCASE("nondecreasing in the exponent") {
        std::mt19937_64 rng(8);
        for (int trial = 0; trial < 20; ++trial) {
            const GridFunction g = random_trig(128, rng, 30);
            double prev = 0.0;
            for (double beta = 0.05; beta < 1.0; beta += 0.05) {
                const double h = holder_estimate(g, beta);
                CHECK(h >= prev);
                prev = h;
            }
        }
    }
    SUBCASE("bridge paths: refinement growth rises with the exponent") {
        // Over 16x refinement a Brownian path's estimator at 0.3 stays nearly
        // flat while at 0.7 it grows roughly like n^{0.2}.
        const int seeds = 20;
        auto mean_ratio = [&](double beta) {
            double r = 0.0;
            for (int s = 0; s < seeds; ++s) {
                // Coarse path = subsample of the fine one, so both see the same realization.
                const auto fine = oracle::random_walk_bridge(4096, 100 + s);
                std::vector<double> coarse(256);
                for (std::size_t j = 0; j < 256; ++j) coarse[j] = fine[16 * j];
                r += holder_estimate(GridFunction(fine), beta) / holder_estimate(GridFunction(coarse), beta);
            }
            return r / seeds;
        };
        const double r30 = mean_ratio(0.3), r45 = mean_ratio(0.45), r70 = mean_ratio(0.7);
        CHECK(std::isfinite(r45));
        CHECK(r30 < 1.3);
        CHECK(r30 <= r45);
        CHECK(r45 < r70);
        CHECK(r70 > 1.5);
    }
}

TEST_CASE("serialization round-trips bit-exactly") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> normal;
    std::vector<double> v(50);
    for (double& x : v) x = normal(rng) * std::pow(10.0, normal(rng) * 20);
    v[3] = -0.0;
    v[4] = 5e-324;
    v[5] = 1.7976931348623157e308;
    const GridFunction g(v);

    std::stringstream csv;
    write_csv(csv, g);
    const GridFunction from_csv = read_csv(csv);
    std::stringstream bin;
    write_binary(bin, g);
    const GridFunction from_bin = read_binary(bin);
    for (std::size_t j = 0; j < v.size(); ++j) {
        CHECK(std::bit_cast<std::uint64_t>(from_csv[j]) == std::bit_cast<std::uint64_t>(v[j]));
        CHECK(std::bit_cast<std::uint64_t>(from_bin[j]) == std::bit_cast<std::uint64_t>(v[j]));
    }
    CHECK(bin.str().size() == 8 + 8 * v.size());

    std::stringstream bad("x,value\n0,abc\n");
    CHECK_THROWS_AS(read_csv(bad), std::invalid_argument);
    std::stringstream no_header("0,1\n");
    CHECK_THROWS_AS(read_csv(no_header), std::invalid_argument);
    std::stringstream truncated(bin.str().substr(0, 20));
    CHECK_THROWS_AS(read_binary(truncated), std::invalid_argument);
}
