#pragma once

#include <complex>
#include <span>
#include <vector>

namespace qspde::fft {

using Spectrum = std::vector<std::complex<double>>;

/// Real-to-complex transform, unnormalized: out_k = sum_j in_j e^{-2 pi i jk/n},
/// k = 0..n/2.
Spectrum forward(std::span<const double> in);

/// Complex-to-real inverse of forward() including the 1/n normalization.
/// Only the first n/2+1 coefficients are read; the input is not modified.
std::vector<double> inverse(std::span<const std::complex<double>> in, std::size_t n);

/// Signed wavenumber of half-spectrum entry k (always k, kept for clarity at
/// call sites) and whether it is the Nyquist entry of an even-length grid.
inline bool is_nyquist(std::size_t k, std::size_t n) { return n % 2 == 0 && k == n / 2; }

}  // namespace qspde::fft
