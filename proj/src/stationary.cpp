#include "robustqm/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Sparse>

#include "robustqm/errors.hpp"
#include "robustqm/tridiagonal.hpp"

namespace robustqm::stationary {

namespace {

void require_same_grid(const Grid1D& a, const Grid1D& b, const char* what) {
    if (!(a == b)) throw DomainError(std::string(what) + ": fields live on different grids");
}

void require_size(const ScalarField& f, const char* what) {
    if (f.values.size() != f.grid.n_points)
        throw DomainError(std::string(what) + ": field size does not match its grid");
}

double wrap_to_pi(double a) {
    // fold into (-pi, pi]
    a = std::remainder(a, 2.0 * std::numbers::pi);
    if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
    return a;
}

} // namespace

StationaryProblem StationaryProblem::with_units(ScalarField potential, double energy, double mass,
                                                double hbar) {
    return {std::move(potential), energy, mass, 4.0 / (hbar * hbar), hbar};
}

void StationaryProblem::validate(bool default_units) const {
    if (!(mass > 0.0)) throw DomainError("mass must be positive");
    if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
    if (!(hbar > 0.0)) throw DomainError("hbar must be positive");
    require_size(potential, "potential");
    if (default_units && std::abs(lambda - 4.0 / (hbar * hbar)) > 1e-12 * lambda)
        throw DomainError("lambda must equal 4/hbar^2 under default units");
}

ScalarField harmonic_potential(const Grid1D& grid, double omega, double mass, double center) {
    return ScalarField::sample(
        grid, [=](double x) { return 0.5 * mass * omega * omega * (x - center) * (x - center); },
        FieldKind::potential);
}

ScalarField zero_potential(const Grid1D& grid) {
    return ScalarField::sample(grid, [](double) { return 0.0; }, FieldKind::potential);
}

double continuum_fisher(const ScalarField& density) {
    require_size(density, "continuum_fisher");
    const auto& p = density.values;
    const double h = density.grid.spacing;
    double acc = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 1; i + 1 < p.size(); ++i) {
        if (!(p[i] >= density_floor)) continue;
        const double d = (p[i + 1] - p[i - 1]) / (2.0 * h);
        acc += d * d / p[i];
        ++used;
    }
    if (used == 0) throw DomainError("continuum_fisher: every node is below the density floor");
    return acc * h;
}

double hje_residual(const ScalarField& density, const ScalarField& action,
                    const StationaryProblem& problem) {
    require_size(density, "hje_residual");
    require_size(action, "hje_residual");
    require_same_grid(density.grid, action.grid, "hje_residual");
    require_same_grid(density.grid, problem.potential.grid, "hje_residual");
    const auto ds = derivative(action.grid, action.values);
    const auto& v = problem.potential.values;
    double acc = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i)
        acc += quadrature_weight(density.grid, i) *
               (ds[i] * ds[i] + 2.0 * problem.mass * (v[i] - problem.energy)) * density.values[i];
    return acc;
}

double functional_F(const ScalarField& density, const ScalarField& action,
                    const StationaryProblem& problem) {
    return continuum_fisher(density) + problem.lambda * hje_residual(density, action, problem);
}

namespace {

// sum over links |psi_{i+1} - psi_i|^2 / h
double link_gradient_energy(const WaveField& psi) {
    const double h = psi.grid.spacing;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < psi.values.size(); ++i)
        acc += std::norm(psi.values[i + 1] - psi.values[i]);
    return acc / h;
}

double potential_energy(const WaveField& psi, const StationaryProblem& problem, double shift) {
    double acc = 0.0;
    for (std::size_t i = 0; i < psi.values.size(); ++i)
        acc += quadrature_weight(psi.grid, i) * (problem.potential.values[i] - shift) *
               std::norm(psi.values[i]);
    return acc;
}

} // namespace

double functional_Q(const WaveField& psi, const StationaryProblem& problem) {
    require_same_grid(psi.grid, problem.potential.grid, "functional_Q");
    return 4.0 * link_gradient_energy(psi) +
           2.0 * problem.mass * problem.lambda * potential_energy(psi, problem, problem.energy);
}

double energy_expectation(const WaveField& psi, const StationaryProblem& problem) {
    require_same_grid(psi.grid, problem.potential.grid, "energy_expectation");
    const double n = psi.norm();
    if (!(n > 0.0)) throw DomainError("energy_expectation: vanishing wave field");
    return (problem.kinetic_coefficient() * link_gradient_energy(psi) +
            potential_energy(psi, problem, 0.0)) /
           n;
}

MadelungPair madelung_split(const WaveField& psi, double lambda) {
    if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
    const std::size_t n = psi.values.size();
    MadelungPair out{ScalarField{psi.grid, std::vector<double>(n), FieldKind::density},
                     ScalarField{psi.grid, std::vector<double>(n, 0.0), FieldKind::action},
                     std::vector<bool>(n, false)};
    const double to_action = 2.0 / std::sqrt(lambda);
    bool any = false;
    double unwrapped = 0.0, last_raw = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out.density.values[i] = std::norm(psi.values[i]);
        if (std::abs(psi.values[i]) < phase_floor) continue;
        const double raw = std::arg(psi.values[i]);
        unwrapped = any ? unwrapped + wrap_to_pi(raw - last_raw) : raw;
        last_raw = raw;
        any = true;
        out.defined[i] = true;
        out.action.values[i] = to_action * unwrapped;
    }
    if (!any) throw PhaseUndefined("wave field vanishes at every node");
    // undefined nodes take the nearest defined value on their left (or the
    // first defined value for a leading gap)
    std::size_t first = 0;
    while (!out.defined[first]) ++first;
    for (std::size_t i = 0; i < first; ++i) out.action.values[i] = out.action.values[first];
    for (std::size_t i = first + 1; i < n; ++i)
        if (!out.defined[i]) out.action.values[i] = out.action.values[i - 1];
    return out;
}

WaveField madelung_join(const ScalarField& density, const ScalarField& action, double lambda) {
    if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
    require_size(density, "madelung_join");
    require_size(action, "madelung_join");
    require_same_grid(density.grid, action.grid, "madelung_join");
    const double half_root = 0.5 * std::sqrt(lambda);
    WaveField psi{density.grid, std::vector<complex>(density.values.size()), false};
    for (std::size_t i = 0; i < psi.values.size(); ++i) {
        if (density.values[i] < 0.0)
            throw DomainError("madelung_join: negative density at node " + std::to_string(i));
        psi.values[i] = std::polar(std::sqrt(density.values[i]), action.values[i] * half_root);
    }
    return psi;
}

std::vector<Eigenpair> solve_eigen(const StationaryProblem& problem, const Grid1D& grid,
                                   std::size_t n_states) {
    grid.validate();
    problem.validate(false);
    require_same_grid(grid, problem.potential.grid, "solve_eigen");
    const std::size_t interior = grid.n_points - 2;
    if (n_states > interior)
        throw DomainError("n_states exceeds the number of interior nodes");

    const double h = grid.spacing;
    const double c = problem.kinetic_coefficient() / (h * h);
    linalg::SymTridiag t;
    t.diag.resize(interior);
    t.off.assign(interior - 1, -c);
    for (std::size_t i = 0; i < interior; ++i) t.diag[i] = 2.0 * c + problem.potential.values[i + 1];

    const auto energies = linalg::lowest_eigenvalues(t, n_states);
    std::vector<Eigenpair> out;
    out.reserve(n_states);
    for (double e : energies) {
        auto v = linalg::eigenvector(t, e);
        WaveField psi{grid, std::vector<complex>(grid.n_points, 0.0), false};
        double peak = 0.0;
        for (double x : v) peak = std::max(peak, std::abs(x));
        // sign: positive on the first lobe, located as the first node above
        // 1% of the peak
        double sign = 1.0;
        for (double x : v)
            if (std::abs(x) > 0.01 * peak) {
                sign = x > 0.0 ? 1.0 : -1.0;
                break;
            }
        for (std::size_t i = 0; i < interior; ++i) psi.values[i + 1] = sign * v[i];
        out.push_back({e, psi.normalized_copy()});
    }
    return out;
}

FunctionalGradient functional_F_gradient(const ScalarField& density, const ScalarField& action,
                                         const StationaryProblem& problem) {
    require_size(density, "functional_F_gradient");
    require_size(action, "functional_F_gradient");
    require_same_grid(density.grid, action.grid, "functional_F_gradient");
    require_same_grid(density.grid, problem.potential.grid, "functional_F_gradient");
    const auto& p = density.values;
    const auto& s = action.values;
    const auto& v = problem.potential.values;
    const std::size_t n = p.size();
    const Grid1D& grid = density.grid;
    const double h = grid.spacing;

    FunctionalGradient g{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    // Fisher term: h * D_j^2 / P_j, D_j = (P_{j+1} - P_{j-1}) / 2h
    for (std::size_t j = 1; j + 1 < n; ++j) {
        if (!(p[j] >= density_floor)) continue;
        const double d = (p[j + 1] - p[j - 1]) / (2.0 * h);
        g.density[j] -= h * d * d / (p[j] * p[j]);
        g.density[j + 1] += d / p[j];
        g.density[j - 1] -= d / p[j];
    }
    const auto ds = derivative(grid, s);
    const double lam = problem.lambda;
    for (std::size_t i = 0; i < n; ++i)
        g.density[i] += lam * quadrature_weight(grid, i) *
                        (ds[i] * ds[i] + 2.0 * problem.mass * (v[i] - problem.energy));
    // action term: lambda * w_i P_i (S'_i)^2
    for (std::size_t i = 0; i < n; ++i) {
        const double coef = lam * quadrature_weight(grid, i) * p[i] * 2.0 * ds[i];
        if (i == 0) {
            g.action[1] += coef / h;
            g.action[0] -= coef / h;
        } else if (i + 1 == n) {
            g.action[n - 1] += coef / h;
            g.action[n - 2] -= coef / h;
        } else {
            g.action[i + 1] += coef / (2.0 * h);
            g.action[i - 1] -= coef / (2.0 * h);
        }
    }
    return g;
}

namespace {

// P clamped to the floor on interior nodes, zero at the ends, unit mass.
void project_density(std::vector<double>& p, const Grid1D& grid, double floor) {
    p.front() = 0.0;
    p.back() = 0.0;
    for (std::size_t i = 1; i + 1 < p.size(); ++i) p[i] = std::max(p[i], floor);
    const double mass = integrate(grid, p);
    if (!(mass > 0.0)) throw DomainError("density lost all mass during projection");
    for (auto& x : p) x /= mass;
}

// (a*(-Delta) + diag(extra) + shift) on interior nodes, Dirichlet ends.
std::vector<double> precondition(std::span<const double> rhs, double h, double a,
                                 std::span<const double> extra, double shift) {
    const std::size_t m = rhs.size();
    std::vector<double> diag(m), off(m - 1, -a / (h * h));
    for (std::size_t i = 0; i < m; ++i) diag[i] = 2.0 * a / (h * h) + extra[i] + shift;
    std::vector<double> x(rhs.begin(), rhs.end());
    linalg::solve_tridiagonal<double>(off, diag, off, x);
    return x;
}

// Gauss-Newton model of the amplitude-space Hessian. The Fisher sum is
// h * sum r_j^2 with r_j = (u_{j+1}^2 - u_{j-1}^2) / (2h u_j); its 2h J^T J
// couples nodes two apart and carries the odd/even stiffness that a plain
// Laplacian misses. A weak Laplacian keeps the checkerboard modes bounded.
class AmplitudeModel {
  public:
    AmplitudeModel(std::span<const double> p, double h, double floor,
                   std::span<const double> potential_diag) {
        const auto n = static_cast<Eigen::Index>(p.size());
        const Eigen::Index m = n - 2;
        std::vector<Eigen::Triplet<double>> jac;
        for (Eigen::Index j = 1; j + 1 < n; ++j) {
            if (!(p[j] >= floor)) continue;
            const double uj = std::sqrt(p[j]);
            const double ul = std::sqrt(p[j - 1]);
            const double ur = std::sqrt(p[j + 1]);
            const double rj = (p[j + 1] - p[j - 1]) / (2.0 * h * uj);
            const Eigen::Index row = j - 1;
            jac.emplace_back(row, j - 1, -rj / uj);
            if (j + 1 < n - 1) jac.emplace_back(row, j, ur / (h * uj));
            if (j - 1 > 0) jac.emplace_back(row, j - 2, -ul / (h * uj));
        }
        Eigen::SparseMatrix<double> J(m, m);
        J.setFromTriplets(jac.begin(), jac.end());
        Eigen::SparseMatrix<double> M = (2.0 * h) * Eigen::SparseMatrix<double>(J.transpose() * J);
        std::vector<Eigen::Triplet<double>> rest;
        const double lap = 2.0 * h / (h * h);
        for (Eigen::Index i = 0; i < m; ++i) {
            rest.emplace_back(i, i, 2.0 * lap + potential_diag[i] + 8.0 * h);
            if (i + 1 < m) {
                rest.emplace_back(i, i + 1, -lap);
                rest.emplace_back(i + 1, i, -lap);
            }
        }
        Eigen::SparseMatrix<double> R(m, m);
        R.setFromTriplets(rest.begin(), rest.end());
        M += R;
        solver_.compute(M);
        if (solver_.info() != Eigen::Success)
            throw LinearSolveError("amplitude preconditioner factorization failed");
    }

    std::vector<double> solve(std::span<const double> rhs) const {
        Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
        Eigen::VectorXd x = solver_.solve(b);
        return {x.data(), x.data() + x.size()};
    }

  private:
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
};

} // namespace

MinimizeResult minimize_F_direct(const StationaryProblem& problem, const Grid1D& grid,
                                 const ScalarField& init_density, const ScalarField& init_action,
                                 const MinimizeOptions& options) {
    grid.validate();
    problem.validate(false);
    require_same_grid(grid, problem.potential.grid, "minimize_F_direct");
    require_same_grid(grid, init_density.grid, "minimize_F_direct");
    require_same_grid(grid, init_action.grid, "minimize_F_direct");
    require_size(init_density, "minimize_F_direct");
    require_size(init_action, "minimize_F_direct");
    for (double x : init_density.values)
        if (!(x >= 0.0)) throw DomainError("initial density must be nonnegative");

    const std::size_t n = grid.n_points;
    const std::size_t m = n - 2;
    const double h = grid.spacing;
    const double lam = problem.lambda;

    MinimizeResult r;
    r.density = init_density;
    r.density.kind = FieldKind::density;
    r.action = init_action;
    r.action.kind = FieldKind::action;
    project_density(r.density.values, grid, options.floor);

    {
        bool constant = true;
        for (std::size_t i = 2; i + 1 < n && constant; ++i)
            constant = r.density.values[i] == r.density.values[1];
        // the flat interior still has Dirichlet edges, so it is not the
        // excluded fixed point; only an all-floor profile is
        if (constant && r.density.values[1] <= options.floor)
            throw DomainError("initial density is constant at the floor");
    }

    // curvature of lambda * h * 2m (V - E) u^2, positive part only
    std::vector<double> extra_u(m);
    for (std::size_t i = 0; i < m; ++i)
        extra_u[i] = 4.0 * problem.mass * lam * h *
                     std::max(problem.potential.values[i + 1] - problem.energy, 0.0);
    const std::vector<double> no_extra(m, 0.0);

    double f = functional_F(r.density, r.action, problem);
    r.history.push_back(f);
    double alpha = 1.0;
    const double armijo = 1e-4;

    for (std::size_t it = 0; it < options.max_iter; ++it) {
        const auto grad = functional_F_gradient(r.density, r.action, problem);
        std::vector<double> u(m), gu(m), wu(m), gs(m);
        for (std::size_t i = 0; i < m; ++i) {
            u[i] = std::sqrt(r.density.values[i + 1]);
            gu[i] = 2.0 * u[i] * grad.density[i + 1];
            wu[i] = h * u[i];
            gs[i] = grad.action[i + 1];
        }
        // amplitude direction, tangent to the constraint sum w u^2 = 1
        const AmplitudeModel model(r.density.values, h, options.floor, extra_u);
        auto mg = model.solve(gu);
        auto mw = model.solve(wu);
        double wmg = 0.0, wmw = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            wmg += wu[i] * mg[i];
            wmw += wu[i] * mw[i];
        }
        const double beta = wmg / wmw;
        std::vector<double> du(m);
        for (std::size_t i = 0; i < m; ++i) du[i] = -mg[i] + beta * mw[i];

        // action direction; the end nodes carry no density and stay put
        double pmax = *std::max_element(r.density.values.begin(), r.density.values.end());
        auto ds = precondition(gs, h, 2.0 * lam * h * pmax, no_extra, 2.0 * lam * h * pmax);
        for (auto& x : ds) x = -x;

        double slope = 0.0;
        for (std::size_t i = 0; i < m; ++i) slope += gu[i] * du[i] + gs[i] * ds[i];
        if (!(slope < 0.0)) {
            r.converged = true;
            break;
        }

        alpha = std::min(1.0, 2.0 * alpha);
        bool accepted = false;
        ScalarField trial_p = r.density, trial_s = r.action;
        double trial_f = f;
        while (alpha > 1e-14) {
            for (std::size_t i = 0; i < m; ++i) {
                const double ui = u[i] + alpha * du[i];
                trial_p.values[i + 1] = ui * ui;
                trial_s.values[i + 1] = r.action.values[i + 1] + alpha * ds[i];
            }
            project_density(trial_p.values, grid, options.floor);
            trial_f = functional_F(trial_p, trial_s, problem);
            if (trial_f <= f + armijo * alpha * slope) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            // no decrease representable: stationary to working precision
            r.converged = true;
            break;
        }
        const double previous = f;
        r.density = std::move(trial_p);
        r.action = std::move(trial_s);
        f = trial_f;
        r.history.push_back(f);
        r.iterations = it + 1;
        if (std::abs(previous - f) < options.tol * std::max(1.0, std::abs(f))) {
            r.converged = true;
            break;
        }
    }
    r.F_value = f;
    return r;
}

ShiftCovariance shift_covariance_check(const std::function<double(double)>& potential,
                                       const Grid1D& grid, double shift, std::size_t n_states,
                                       double mass, double hbar) {
    grid.validate();
    const double steps = shift / grid.spacing;
    if (std::abs(steps - std::round(steps)) > 1e-9)
        throw DomainError("shift must be an integer multiple of the grid spacing");

    auto base_problem = StationaryProblem::with_units(
        ScalarField::sample(grid, potential, FieldKind::potential), 0.0, mass, hbar);
    const Grid1D moved = grid.shifted(shift);
    auto moved_problem = StationaryProblem::with_units(
        ScalarField::sample(moved, [&](double x) { return potential(x - shift); },
                            FieldKind::potential),
        0.0, mass, hbar);

    const auto a = solve_eigen(base_problem, grid, n_states);
    const auto b = solve_eigen(moved_problem, moved, n_states);
    ShiftCovariance out;
    for (std::size_t k = 0; k < n_states; ++k) {
        out.max_energy_difference =
            std::max(out.max_energy_difference, std::abs(a[k].energy - b[k].energy));
        for (std::size_t i = 0; i < grid.n_points; ++i)
            out.max_state_difference = std::max(
                out.max_state_difference, std::abs(a[k].state.values[i] - b[k].state.values[i]));
    }
    out.pass = out.max_energy_difference <= 1e-10 && out.max_state_difference <= 1e-10;
    return out;
}

} // namespace robustqm::stationary
