#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace qspde {

/**
 * A real function on the torus T = [0,1) sampled at x_j = j/n, j = 0..n-1.
 *
 * Periodicity is structural: index arithmetic wraps mod n and the value at
 * x = 1 is never stored. Instances are immutable values; every operation
 * returns a new GridFunction.
 */
class GridFunction {
public:
    static constexpr std::size_t min_size = 8;

    /// Throws std::invalid_argument if n < 8 or any value is non-finite.
    explicit GridFunction(std::vector<double> values);

    static GridFunction constant(std::size_t n, double c);

    template <typename F>
    static GridFunction sample(std::size_t n, F&& f) {
        std::vector<double> v(n);
        for (std::size_t j = 0; j < n; ++j) {
            v[j] = f(static_cast<double>(j) / static_cast<double>(n));
        }
        return GridFunction(std::move(v));
    }

    std::size_t size() const { return values_.size(); }
    double dx() const { return 1.0 / static_cast<double>(values_.size()); }
    double x(std::size_t j) const { return static_cast<double>(j) * dx(); }

    double operator[](std::size_t j) const { return values_[j]; }
    /// Periodic access: any integer index is reduced mod n.
    double wrap(std::ptrdiff_t j) const;

    std::span<const double> values() const { return values_; }
    const std::vector<double>& vector() const { return values_; }

    double min() const;
    double max() const;

    template <typename F>
    GridFunction map(F&& f) const {
        std::vector<double> v(values_.size());
        for (std::size_t j = 0; j < v.size(); ++j) v[j] = f(values_[j]);
        return GridFunction(std::move(v));
    }

    GridFunction operator-() const;
    GridFunction& operator+=(const GridFunction& other);
    GridFunction& operator-=(const GridFunction& other);
    GridFunction& operator*=(const GridFunction& other);
    GridFunction& operator*=(double s);
    GridFunction& operator+=(double s);

    friend bool operator==(const GridFunction&, const GridFunction&) = default;

private:
    std::vector<double> values_;
};

GridFunction operator+(GridFunction a, const GridFunction& b);
GridFunction operator-(GridFunction a, const GridFunction& b);
GridFunction operator*(GridFunction a, const GridFunction& b);
GridFunction operator/(const GridFunction& a, const GridFunction& b);
GridFunction operator*(GridFunction a, double s);
GridFunction operator*(double s, GridFunction a);
GridFunction operator+(GridFunction a, double s);
GridFunction operator-(GridFunction a, double s);

/// Throws std::invalid_argument when the two grids differ in size.
void require_same_grid(const GridFunction& a, const GridFunction& b, const char* what);

// ---------------------------------------------------------------------------
// Calculus

enum class DiffMethod {
    spectral,  ///< Fourier multiplier (2*pi*i*k)^order; Nyquist dropped for odd orders
    central,   ///< second-order central differences
};

GridFunction differentiate(const GridFunction& g, int order = 1,
                           DiffMethod method = DiffMethod::spectral);

/// (g_{j+1} - g_j)/dx, the derivative located at the half node x_{j+1/2}.
GridFunction forward_difference(const GridFunction& g);

/// Arithmetic mean of neighbours, (g_j + g_{j+1})/2, located at x_{j+1/2}.
GridFunction half_node_average(const GridFunction& g);

/// Trigonometric interpolant evaluated at x_{j+1/2}.
GridFunction spectral_half_shift(const GridFunction& g);

/// Uniform rectangle rule; exact for trigonometric polynomials below Nyquist.
double integrate(const GridFunction& g);

/// G(x_j) = int_0^{x_j} g(y) dy: mean part integrated exactly, periodic part
/// by its Fourier antiderivative. G(x_0) = 0.
GridFunction antiderivative(const GridFunction& g);

/// Heat-semigroup smoothing: multiplies mode k by exp(-eps (2 pi k)^2).
GridFunction heat_smooth(const GridFunction& g, double eps);

// ---------------------------------------------------------------------------
// Norms

namespace norm_kind {
struct L2 {};
struct L2Weighted { const GridFunction* theta; };
struct H1 {};
struct H1Weighted { const GridFunction* theta; };
struct Linf {};
/// Discrete Hoelder estimator with exponent in (0,1), see holder_estimate().
struct Holder { double exponent; };
}  // namespace norm_kind

using NormKind = std::variant<norm_kind::L2, norm_kind::L2Weighted, norm_kind::H1,
                              norm_kind::H1Weighted, norm_kind::Linf, norm_kind::Holder>;

double norm(const GridFunction& g, const NormKind& kind);

double l2_norm(const GridFunction& g);
double l2_norm(const GridFunction& g, const GridFunction& theta);
/// L2 norm from the Fourier coefficients (Parseval).
double spectral_l2_norm(const GridFunction& g);
double linf_norm(const GridFunction& g);

/// H1 norms. The spectral variant uses differentiate(); the staggered variant
/// uses forward differences weighted by half-node averages of theta and is the
/// discrete H1 used by the finite-volume solver.
enum class Gradient { spectral, staggered };
double h1_norm(const GridFunction& g, Gradient grad = Gradient::spectral);
double h1_norm(const GridFunction& g, const GridFunction& theta,
               Gradient grad = Gradient::spectral);
/// Gradient part only: (int (g')^2 theta)^{1/2}.
double h1_seminorm(const GridFunction& g, const GridFunction& theta,
                   Gradient grad = Gradient::spectral);

/**
 * Estimator for the C^beta norm: sup|g| plus the maximum over dyadic lags
 * h = 2^k dx (h <= 1/2) of max_j |g(x_j + h) - g(x_j)| / h^beta.
 *
 * This is an estimator on the grid, not the Besov norm. For fixed g it is
 * nondecreasing in beta because every lag is at most 1.
 */
double holder_estimate(const GridFunction& g, double beta);

/// Throws std::invalid_argument unless every value is strictly positive.
void require_positive(const GridFunction& theta, const char* what);

// ---------------------------------------------------------------------------
// Serialization. Both formats round-trip bit-exactly.

/// CSV with header "x,value"; values printed in shortest round-trip form.
void write_csv(std::ostream& os, const GridFunction& g);
void write_csv(const std::filesystem::path& path, const GridFunction& g);
GridFunction read_csv(std::istream& is);
GridFunction read_csv(const std::filesystem::path& path);

/// Binary: uint64 n followed by n IEEE-754 doubles, all little-endian.
void write_binary(std::ostream& os, const GridFunction& g);
void write_binary(const std::filesystem::path& path, const GridFunction& g);
GridFunction read_binary(std::istream& is);
GridFunction read_binary(const std::filesystem::path& path);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

}  // namespace qspde
