#pragma once

#include "qspde/grid.hpp"

#include <cstdint>
#include <span>
#include <string>

namespace qspde {

/// Derived random streams: seed XOR a per-stream constant. Stream 0 is the
/// seed itself.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

namespace stream {
inline constexpr std::uint64_t noise = 0;
inline constexpr std::uint64_t initial_profile = 1;
inline constexpr std::uint64_t property_tests = 2;
}  // namespace stream

/**
 * A noise realization xi = w' + sigma held through its integral
 * eta(x) = int_0^x xi = eta_periodic(x) + sigma x.
 *
 * The periodic part and sigma are stored separately so that eta(1) = sigma
 * holds exactly and drifts compose without rounding.
 */
class NoiseSample {
public:
    /// Reconstruction data; rebuilding from it reproduces eta bit-exactly.
    struct Header {
        std::uint64_t seed = 0;
        std::size_t n = 0;
        std::size_t kl_modes = 0;  ///< 0 for the zero sample
        double sigma = 0.0;
        double eps = 0.0;
        std::string source;  ///< "bridge", "zero", "coefficients" or "external"
    };

    NoiseSample(GridFunction periodic, double sigma, Header header);

    const GridFunction& periodic() const { return periodic_; }
    double sigma() const { return sigma_; }
    std::size_t size() const { return periodic_.size(); }
    const Header& header() const { return header_; }

    /// eta at the grid nodes; eta[0] = 0 and eta(1) = sigma.
    GridFunction eta() const;

private:
    GridFunction periodic_;
    double sigma_;
    Header header_;
};

NoiseSample zero_noise(std::size_t n);

/**
 * Brownian bridge by its Karhunen-Loeve sine expansion
 * w(x) = sum_{k=1}^K Z_k sqrt(2) sin(k pi x)/(k pi).
 *
 * Z_k are drawn in order from one mt19937_64 stream, so samples with
 * different K but the same seed share their leading modes.
 */
NoiseSample sample_bridge(std::uint64_t seed, std::size_t n, std::size_t kl_modes);

/// Same expansion with explicitly given coefficients Z_1..Z_K.
NoiseSample bridge_from_coefficients(std::size_t n, std::span<const double> z);

/// Wraps an externally supplied eta (eta[0] must be 0) whose value at x = 1
/// is sigma.
NoiseSample noise_from_eta(const GridFunction& eta, double sigma);

/// eta -> eta + sigma x, header sigma accumulated.
NoiseSample with_drift(const NoiseSample& noise, double sigma);

/// Heat-smooths the periodic part (multiplier exp(-eps (2 pi k)^2)) and
/// re-anchors it so eta_eps(0) = 0. The drift is untouched.
NoiseSample mollify(const NoiseSample& noise, double eps);

/// xi_eps = (heat-smoothed periodic part)' + sigma; integrates to sigma.
/// At eps = 0 this is the spectral derivative of the periodic part.
GridFunction mollified_xi(const NoiseSample& noise, double eps);

/// Rebuilds a sample from its header. Only "zero" and "bridge" sources can be
/// rebuilt; others throw std::invalid_argument.
NoiseSample reconstruct(const NoiseSample::Header& header);

}  // namespace qspde
