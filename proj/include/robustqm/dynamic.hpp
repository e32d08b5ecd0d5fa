#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "robustqm/grid.hpp"

namespace robustqm::dynamic {

using SpaceTimeFn = std::function<double(double x, double t)>;

/// Vector potential A(x, t), scalar potential V(x, t), charge q and c.
struct GaugeField {
    SpaceTimeFn A;
    SpaceTimeFn V;
    double charge = 1.0;
    double light_speed = 1.0;

    /// A = 0 and V = V(x).
    static GaugeField static_potential(std::function<double(double)> v);
    static GaugeField free();
};

struct PropagatorConfig {
    Grid1D grid;
    double dt = 1e-3;
    double t_start = 0.0;
    double t_final = 1.0;
    double mass = 1.0;
    double hbar = 1.0;
    double lambda = 4.0;
    bool default_units = true;
    /// Trace sample every `sample_stride` steps (and at the final time).
    std::size_t sample_stride = 1;
    /// Keep a snapshot every `snapshot_stride` steps when enabled.
    bool keep_snapshots = false;
    std::size_t snapshot_stride = 1;

    void validate() const;
    std::size_t steps() const;
};

struct ObservableTrace {
    std::vector<double> times;
    std::vector<double> norm;
    std::vector<double> mean_x;
    std::vector<double> width;
    std::vector<double> fisher_spatial;
    std::vector<double> hje_residual;

    std::size_t size() const noexcept { return times.size(); }
};

struct Observables {
    double norm = 0.0;
    double mean_x = 0.0;
    double width = 0.0;
    double fisher_spatial = 0.0;
};

/// Norm, density mean and standard deviation, and continuum Fisher
/// information of |psi|^2 (the moments use the normalized density).
Observables observables(const WaveField& psi);

/// Link phases theta_j = (q / hbar c) * integral of A over [x_j, x_{j+1}],
/// 3-point Gauss-Legendre per link.
std::vector<double> link_phases(const Grid1D& grid, const GaugeField& fields, double t,
                                double hbar);

/// One Crank-Nicolson step from t to t + dt with the fields at t + dt / 2.
/// A negative dt runs the conjugate (backward) step.
WaveField cn_step(const WaveField& psi, const GaugeField& fields, const PropagatorConfig& config,
                  double t, double dt);

struct Propagation {
    WaveField final_state;
    ObservableTrace trace;
    std::vector<WaveField> snapshots;
    std::vector<double> snapshot_times;
};

/**
 * Crank-Nicolson propagation of i hbar psi_t = [-(hbar^2/2m)(d/dx - iqA/hbar c)^2 + V] psi
 * from config.t_start to config.t_final with Dirichlet-zero ends. The
 * covariant derivative uses link phases. Throws StabilityError when the norm
 * drifts by more than 1e-6.
 */
Propagation propagate(const WaveField& psi0, const GaugeField& fields,
                      const PropagatorConfig& config);

/// Returns (psi exp(i q sqrt(lambda) chi / 2c), fields with A + chi_x and
/// V - (q/c) chi_t). Derivatives of chi are central differences.
std::pair<WaveField, GaugeField> gauge_transform(const WaveField& psi, const GaugeField& fields,
                                                 const SpaceTimeFn& chi, double t,
                                                 double lambda = 4.0);

struct GaugeGap {
    double density_gap = 0.0;  ///< max_i ||psi_a|^2 - |psi_b|^2|
    double wave_gap = 0.0;     ///< max_i |psi_a - e^{i phi} psi_b|, phi from the overlap
};

/// Compares evolve-then-transform against transform-then-evolve over
/// [config.t_start, config.t_final] for the gauge function chi.
GaugeGap gauge_covariance_gap(const WaveField& psi0, const GaugeField& fields,
                              const SpaceTimeFn& chi, const PropagatorConfig& config);

/// Quadrature of [S_t + (S' - qA/c)^2 / 2m + V] P at one instant, with S_t
/// from the neighbouring states psi(t - dt) and psi(t + dt). Nodes with
/// |psi| < 1e-12 are left out.
double hje_residual_at(const WaveField& before, const WaveField& now, const WaveField& after,
                       double dt, double t, const GaugeField& fields,
                       const PropagatorConfig& config);

/// hje_residual_at for every interior snapshot of a uniformly spaced series.
std::vector<double> avg_hje_residual(const std::vector<WaveField>& snapshots,
                                     const std::vector<double>& times, const GaugeField& fields,
                                     const PropagatorConfig& config);

struct FunctionalQ {
    double total = 0.0;
    double time_term = 0.0;
    double gradient_term = 0.0;
    double potential_term = 0.0;
};

/// Space-time quadrature of
///   2 { m i sqrt(lambda) (psi conj(psi)_t - conj(psi) psi_t)
///       + 2 |(d/dx - i q sqrt(lambda) A / 2c) psi|^2 + m lambda V |psi|^2 }
/// over the snapshots (time derivatives by central differences, one-sided at
/// the ends; trapezoid in time).
FunctionalQ tdse_functional_Q(const std::vector<WaveField>& snapshots,
                              const std::vector<double>& times, const GaugeField& fields,
                              const PropagatorConfig& config);

} // namespace robustqm::dynamic
