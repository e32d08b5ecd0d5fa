#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace robustqm {

using complex = std::complex<double>;

/// Uniform grid x_i = origin + i * spacing, i = 0..n_points-1, with
/// homogeneous Dirichlet boundaries.
struct Grid1D {
    std::size_t n_points = 0;
    double spacing = 0.0;
    double origin = 0.0;

    /// n nodes spanning [x_min, x_max] inclusive.
    static Grid1D over(double x_min, double x_max, std::size_t n_points);

    /// Throws DomainError unless n_points >= 3 and spacing > 0.
    void validate() const;

    double node(std::size_t i) const noexcept { return origin + static_cast<double>(i) * spacing; }
    double back() const noexcept { return node(n_points - 1); }
    double center() const noexcept { return 0.5 * (origin + back()); }
    std::vector<double> nodes() const;
    Grid1D shifted(double offset) const noexcept { return {n_points, spacing, origin + offset}; }

    bool operator==(const Grid1D&) const = default;
};

enum class FieldKind { density, action, potential };

struct ScalarField {
    Grid1D grid;
    std::vector<double> values;
    FieldKind kind = FieldKind::potential;

    static ScalarField sample(const Grid1D& grid, const std::function<double(double)>& f,
                              FieldKind kind);
    std::size_t size() const noexcept { return values.size(); }
};

struct WaveField {
    Grid1D grid;
    std::vector<complex> values;
    bool normalized = false;

    static WaveField sample(const Grid1D& grid, const std::function<complex(double)>& f);

    /// Quadrature of |psi|^2.
    double norm() const;
    /// Copy scaled to unit norm, flagged normalized.
    WaveField normalized_copy() const;
    std::vector<double> density() const;
    std::size_t size() const noexcept { return values.size(); }
};

/// Trapezoidal rule on the grid; for fields vanishing at both ends this is
/// h * sum(values).
double integrate(const Grid1D& grid, std::span<const double> values);

/// Trapezoid weights: h/2 at the ends, h elsewhere.
double quadrature_weight(const Grid1D& grid, std::size_t i) noexcept;

/// Central difference at interior nodes, one-sided first-order at the ends.
std::vector<double> derivative(const Grid1D& grid, std::span<const double> values);

/// Normalized Gaussian density exp(-(x - mu)^2 / 2 sigma^2) / sqrt(2 pi sigma^2).
double gaussian_density(double x, double mu, double sigma);

/// Unit-norm Gaussian packet with density standard deviation sigma, centred
/// at x0, carrying momentum hbar * k0.
WaveField gaussian_packet(const Grid1D& grid, double x0, double sigma, double k0);

} // namespace robustqm
