#include "tridiag.hpp"

#include <stdexcept>

namespace qspde::detail {
namespace {

// Thomas algorithm for a non-periodic tridiagonal system; a[0] and c[n-1]
// are ignored.
void thomas(const std::vector<double>& a, std::vector<double> b, const std::vector<double>& c,
            std::vector<double>& x) {
    const std::size_t n = b.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double w = a[i] / b[i - 1];
        b[i] -= w * c[i - 1];
        x[i] -= w * x[i - 1];
    }
    x[n - 1] /= b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = (x[i] - c[i] * x[i + 1]) / b[i];
}

}  // namespace

std::vector<double> solve_cyclic_tridiagonal(const std::vector<double>& lower, const std::vector<double>& diag,
                                             const std::vector<double>& upper, const std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    if (n < 3 || lower.size() != n || upper.size() != n || rhs.size() != n) {
        throw std::invalid_argument("cyclic tridiagonal: inconsistent sizes");
    }
    // A = B + u v^T with u = (gamma, 0, ..., 0, upper[n-1]),
    // v = (1, 0, ..., 0, lower[0]/gamma).
    const double gamma = -diag[0];
    std::vector<double> b = diag;
    b[0] -= gamma;
    b[n - 1] -= lower[0] * upper[n - 1] / gamma;

    std::vector<double> x = rhs;
    thomas(lower, b, upper, x);
    std::vector<double> z(n, 0.0);
    z[0] = gamma;
    z[n - 1] = upper[n - 1];
    thomas(lower, b, upper, z);

    const double factor = (x[0] + lower[0] * x[n - 1] / gamma) / (1.0 + z[0] + lower[0] * z[n - 1] / gamma);
    for (std::size_t i = 0; i < n; ++i) x[i] -= factor * z[i];
    return x;
}

}  // namespace qspde::detail
