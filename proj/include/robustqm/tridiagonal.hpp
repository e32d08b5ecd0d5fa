#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace robustqm::linalg {

/// Real symmetric tridiagonal matrix: diag has n entries, off has n-1.
struct SymTridiag {
    std::vector<double> diag;
    std::vector<double> off;

    std::size_t size() const noexcept { return diag.size(); }
};

/// Number of eigenvalues strictly below x (Sturm sequence count).
std::size_t count_below(const SymTridiag& t, double x);

/// The k lowest eigenvalues in ascending order by bisection on the Sturm
/// count.
std::vector<double> lowest_eigenvalues(const SymTridiag& t, std::size_t k);

/// Eigenvector for a converged eigenvalue by inverse iteration; unit
/// Euclidean norm. Throws ConvergenceError if the residual stays above
/// tolerance after max_iter sweeps.
std::vector<double> eigenvector(const SymTridiag& t, double eigenvalue, int max_iter = 8);

/// y = T x
std::vector<double> multiply(const SymTridiag& t, std::span<const double> x);

/**
 * Solves the tridiagonal system with sub-diagonal `lower` (n-1), diagonal
 * `diag` (n) and super-diagonal `upper` (n-1) in place on `rhs`, Thomas
 * algorithm without pivoting. Throws LinearSolveError on a vanishing pivot.
 */
template <class T>
void solve_tridiagonal(std::span<const T> lower, std::span<const T> diag,
                       std::span<const T> upper, std::span<T> rhs);

extern template void solve_tridiagonal<double>(std::span<const double>, std::span<const double>,
                                               std::span<const double>, std::span<double>);
extern template void solve_tridiagonal<std::complex<double>>(
    std::span<const std::complex<double>>, std::span<const std::complex<double>>,
    std::span<const std::complex<double>>, std::span<std::complex<double>>);

} // namespace robustqm::linalg
