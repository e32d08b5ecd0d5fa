#include "robustqm/grid.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "robustqm/errors.hpp"

namespace robustqm {

Grid1D Grid1D::over(double x_min, double x_max, std::size_t n_points) {
    if (n_points < 3) throw DomainError("grid needs at least 3 nodes");
    if (!(x_max > x_min)) throw DomainError("grid needs x_max > x_min");
    return {n_points, (x_max - x_min) / static_cast<double>(n_points - 1), x_min};
}

void Grid1D::validate() const {
    if (n_points < 3) throw DomainError("grid needs at least 3 nodes, got " + std::to_string(n_points));
    if (!(spacing > 0.0) || !std::isfinite(spacing)) throw DomainError("grid spacing must be positive");
    if (!std::isfinite(origin)) throw DomainError("grid origin must be finite");
}

std::vector<double> Grid1D::nodes() const {
    std::vector<double> x(n_points);
    for (std::size_t i = 0; i < n_points; ++i) x[i] = node(i);
    return x;
}

ScalarField ScalarField::sample(const Grid1D& grid, const std::function<double(double)>& f,
                                FieldKind kind) {
    grid.validate();
    ScalarField s{grid, std::vector<double>(grid.n_points), kind};
    for (std::size_t i = 0; i < grid.n_points; ++i) s.values[i] = f(grid.node(i));
    return s;
}

WaveField WaveField::sample(const Grid1D& grid, const std::function<complex(double)>& f) {
    grid.validate();
    WaveField w{grid, std::vector<complex>(grid.n_points), false};
    for (std::size_t i = 0; i < grid.n_points; ++i) w.values[i] = f(grid.node(i));
    return w;
}

double WaveField::norm() const { return integrate(grid, density()); }

WaveField WaveField::normalized_copy() const {
    const double n = norm();
    if (!(n > 0.0)) throw DomainError("cannot normalize a vanishing wave field");
    WaveField w = *this;
    const double scale = 1.0 / std::sqrt(n);
    for (auto& v : w.values) v *= scale;
    w.normalized = true;
    return w;
}

std::vector<double> WaveField::density() const {
    std::vector<double> p(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) p[i] = std::norm(values[i]);
    return p;
}

double quadrature_weight(const Grid1D& grid, std::size_t i) noexcept {
    return (i == 0 || i + 1 == grid.n_points) ? 0.5 * grid.spacing : grid.spacing;
}

double integrate(const Grid1D& grid, std::span<const double> values) {
    if (values.size() != grid.n_points) throw DomainError("field size does not match grid");
    double acc = 0.0;
    for (std::size_t i = 1; i + 1 < values.size(); ++i) acc += values[i];
    acc += 0.5 * (values.front() + values.back());
    return acc * grid.spacing;
}

std::vector<double> derivative(const Grid1D& grid, std::span<const double> values) {
    const std::size_t n = values.size();
    if (n != grid.n_points) throw DomainError("field size does not match grid");
    std::vector<double> d(n);
    const double h = grid.spacing;
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
    d[0] = (values[1] - values[0]) / h;
    d[n - 1] = (values[n - 1] - values[n - 2]) / h;
    return d;
}

double gaussian_density(double x, double mu, double sigma) {
    const double z = (x - mu) / sigma;
    return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * sigma);
}

WaveField gaussian_packet(const Grid1D& grid, double x0, double sigma, double k0) {
    auto w = WaveField::sample(grid, [&](double x) {
        return std::sqrt(gaussian_density(x, x0, sigma)) * std::polar(1.0, k0 * (x - x0));
    });
    w.values.front() = 0.0;
    w.values.back() = 0.0;
    return w.normalized_copy();
}

} // namespace robustqm
