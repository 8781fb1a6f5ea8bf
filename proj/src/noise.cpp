#include "qspde/noise.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

namespace qspde {
namespace {

std::invalid_argument noise_error(const std::string& msg) {
    return std::invalid_argument("noise: " + msg);
}

GridFunction kl_sum(std::size_t n, std::span<const double> z) {
    // sin(k pi j/n) depends only on k*j mod 2n.
    const std::size_t period = 2 * n;
    std::vector<double> table(period);
    for (std::size_t r = 0; r < period; ++r) {
        table[r] = std::sin(std::numbers::pi * static_cast<double>(r) / static_cast<double>(n));
    }
    std::vector<double> eta(n, 0.0);
    for (std::size_t k = 1; k <= z.size(); ++k) {
        const double a = z[k - 1] * std::numbers::sqrt2 / (static_cast<double>(k) * std::numbers::pi);
        for (std::size_t j = 1; j < n; ++j) eta[j] += a * table[(k * j) % period];
    }
    eta[0] = 0.0;
    return GridFunction(std::move(eta));
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return seed ^ (stream * 0x9E3779B97F4A7C15ULL);
}

NoiseSample::NoiseSample(GridFunction periodic, double sigma, Header header)
    : periodic_(std::move(periodic)), sigma_(sigma), header_(std::move(header)) {
    if (!std::isfinite(sigma_)) throw noise_error("sigma must be finite");
    if (periodic_[0] != 0.0) throw noise_error("eta must vanish at x = 0");
    header_.n = periodic_.size();
    header_.sigma = sigma_;
}

GridFunction NoiseSample::eta() const {
    const std::size_t n = size();
    std::vector<double> v(n);
    for (std::size_t j = 0; j < n; ++j) v[j] = periodic_[j] + sigma_ * periodic_.x(j);
    return GridFunction(std::move(v));
}

NoiseSample zero_noise(std::size_t n) {
    return NoiseSample(GridFunction::constant(n, 0.0), 0.0, {.source = "zero"});
}

NoiseSample sample_bridge(std::uint64_t seed, std::size_t n, std::size_t kl_modes) {
    if (n < GridFunction::min_size) throw noise_error("grid size must be at least 8");
    if (kl_modes < 1 || kl_modes > n / 2) {
        throw noise_error("kl_modes must lie in [1, n/2], got " + std::to_string(kl_modes));
    }
    std::mt19937_64 rng(derive_seed(seed, stream::noise));
    std::normal_distribution<double> normal;
    std::vector<double> z(kl_modes);
    for (double& v : z) v = normal(rng);
    return NoiseSample(kl_sum(n, z), 0.0, {.seed = seed, .kl_modes = kl_modes, .source = "bridge"});
}

NoiseSample bridge_from_coefficients(std::size_t n, std::span<const double> z) {
    if (z.empty() || z.size() > n / 2) throw noise_error("need between 1 and n/2 coefficients");
    return NoiseSample(kl_sum(n, z), 0.0, {.kl_modes = z.size(), .source = "coefficients"});
}

NoiseSample noise_from_eta(const GridFunction& eta, double sigma) {
    if (eta[0] != 0.0) throw noise_error("eta must vanish at x = 0");
    std::vector<double> p(eta.size());
    for (std::size_t j = 0; j < p.size(); ++j) p[j] = eta[j] - sigma * eta.x(j);
    p[0] = 0.0;
    return NoiseSample(GridFunction(std::move(p)), sigma, {.source = "external"});
}

NoiseSample with_drift(const NoiseSample& noise, double sigma) {
    return NoiseSample(noise.periodic(), noise.sigma() + sigma, noise.header());
}

NoiseSample mollify(const NoiseSample& noise, double eps) {
    if (!(eps >= 0.0)) throw noise_error("mollification scale must be nonnegative");
    GridFunction smooth = heat_smooth(noise.periodic(), eps);
    smooth += -smooth[0];
    std::vector<double> v = smooth.vector();
    v[0] = 0.0;
    NoiseSample::Header h = noise.header();
    h.eps += eps;
    return NoiseSample(GridFunction(std::move(v)), noise.sigma(), h);
}

GridFunction mollified_xi(const NoiseSample& noise, double eps) {
    if (!(eps >= 0.0)) throw noise_error("mollification scale must be nonnegative");
    return differentiate(heat_smooth(noise.periodic(), eps)) + noise.sigma();
}

NoiseSample reconstruct(const NoiseSample::Header& header) {
    NoiseSample base = [&] {
        if (header.source == "zero") return zero_noise(header.n);
        if (header.source == "bridge") return sample_bridge(header.seed, header.n, header.kl_modes);
        throw noise_error("cannot rebuild a sample of source '" + header.source + "' from its header");
    }();
    NoiseSample drifted = header.sigma == 0.0 ? base : with_drift(base, header.sigma);
    return header.eps == 0.0 ? drifted : mollify(drifted, header.eps);
}

}  // namespace qspde
