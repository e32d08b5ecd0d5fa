#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "robustqm/grid.hpp"

namespace robustqm::stationary {

inline constexpr double density_floor = 1e-12;
inline constexpr double phase_floor = 1e-12;

/// Potential V, energy E, mass m, multiplier lambda and hbar. With the
/// default units lambda = 4 / hbar^2.
struct StationaryProblem {
    ScalarField potential;
    double energy = 0.0;
    double mass = 1.0;
    double lambda = 4.0;
    double hbar = 1.0;

    static StationaryProblem with_units(ScalarField potential, double energy, double mass = 1.0,
                                        double hbar = 1.0);

    /// Throws DomainError on non-positive m, lambda, hbar, or when
    /// default_units is set and lambda != 4 / hbar^2.
    void validate(bool default_units = true) const;

    /// hbar^2 / 2m written through lambda: 2 / (m lambda).
    double kinetic_coefficient() const noexcept { return 2.0 / (mass * lambda); }
};

ScalarField harmonic_potential(const Grid1D& grid, double omega = 1.0, double mass = 1.0,
                               double center = 0.0);
ScalarField zero_potential(const Grid1D& grid);

/// Quadrature of (P')^2 / P over interior nodes with central differences;
/// nodes with P < 1e-12 are skipped.
double continuum_fisher(const ScalarField& density);

/// Quadrature of [(S')^2 + 2m (V - E)] P.
double hje_residual(const ScalarField& density, const ScalarField& action,
                    const StationaryProblem& problem);

/// continuum_fisher(P) + lambda * hje_residual(P, S).
double functional_F(const ScalarField& density, const ScalarField& action,
                    const StationaryProblem& problem);

/// Quadrature of 4 |psi'|^2 + 2 m lambda (V - E) |psi|^2; the gradient term
/// uses forward differences on the links between nodes.
double functional_Q(const WaveField& psi, const StationaryProblem& problem);

/// <H> = (2/(m lambda)) |psi'|^2 + V |psi|^2 with the same discretization
/// as functional_Q, divided by the norm.
double energy_expectation(const WaveField& psi, const StationaryProblem& problem);

struct MadelungPair {
    ScalarField density;
    ScalarField action;
    /// false where |psi| < 1e-12 and the phase carries no information;
    /// such nodes hold the nearest defined action value.
    std::vector<bool> defined;
};

/// P = |psi|^2, S = (2/sqrt(lambda)) arg psi unwrapped left to right.
MadelungPair madelung_split(const WaveField& psi, double lambda);

/// psi = sqrt(P) exp(i S sqrt(lambda) / 2).
WaveField madelung_join(const ScalarField& density, const ScalarField& action, double lambda);

struct Eigenpair {
    double energy = 0.0;
    WaveField state;
};

/// Lowest n_states eigenpairs of -(2/(m lambda)) psi'' + V psi = E psi,
/// second-order differences, Dirichlet-zero ends. States are normalized and
/// positive at their first lobe.
std::vector<Eigenpair> solve_eigen(const StationaryProblem& problem, const Grid1D& grid,
                                   std::size_t n_states);

struct FunctionalGradient {
    std::vector<double> density;  ///< dF/dP_i
    std::vector<double> action;   ///< dF/dS_i
};

/// Exact gradient of the discretized functional_F.
FunctionalGradient functional_F_gradient(const ScalarField& density, const ScalarField& action,
                                         const StationaryProblem& problem);

struct MinimizeOptions {
    std::size_t max_iter = 20000;
    double tol = 1e-11;
    double floor = density_floor;
};

struct MinimizeResult {
    ScalarField density;
    ScalarField action;
    double F_value = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    /// F after every accepted iterate, starting with the projected initial
    /// guess.
    std::vector<double> history;
};

/**
 * Direct minimization of the discretized F over (P, S).
 *
 * Projected descent: the P-update is taken in amplitude u = sqrt(P)
 * coordinates and preconditioned by a shifted discrete Laplacian, the
 * S-update by the plain Laplacian; both with Armijo backtracking so F never
 * increases. After each step P is clamped to >= floor on interior nodes,
 * pinned to 0 at the ends, and renormalized. Stops when
 * |F_prev - F| < tol * max(1, |F|), or flags non-convergence at max_iter.
 */
MinimizeResult minimize_F_direct(const StationaryProblem& problem, const Grid1D& grid,
                                 const ScalarField& init_density, const ScalarField& init_action,
                                 const MinimizeOptions& options = {});

struct ShiftCovariance {
    double max_energy_difference = 0.0;
    double max_state_difference = 0.0;
    bool pass = false;
};

/// Solves V on grid and V(x - shift) on the grid shifted by `shift` (an
/// integer multiple of the spacing) and compares spectra and nodal states.
ShiftCovariance shift_covariance_check(const std::function<double(double)>& potential,
                                       const Grid1D& grid, double shift, std::size_t n_states = 3,
                                       double mass = 1.0, double hbar = 1.0);

} // namespace robustqm::stationary
