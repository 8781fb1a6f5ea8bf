#pragma once

#include <cstddef>
#include <vector>

namespace qspde::detail {

/// Solves the periodic tridiagonal system
///   lower[j] x[j-1] + diag[j] x[j] + upper[j] x[j+1] = rhs[j]   (indices mod n)
/// by the Sherman-Morrison correction of a Thomas solve. Intended for
/// diagonally dominant matrices; no pivoting.
std::vector<double> solve_cyclic_tridiagonal(const std::vector<double>& lower, const std::vector<double>& diag,
                                             const std::vector<double>& upper, const std::vector<double>& rhs);

}  // namespace qspde::detail
