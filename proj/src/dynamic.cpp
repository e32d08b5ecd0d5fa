#include "robustqm/dynamic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "robustqm/errors.hpp"
#include "robustqm/stationary.hpp"
#include "robustqm/tridiagonal.hpp"

namespace robustqm::dynamic {

namespace {

constexpr double phase_floor = 1e-12;

// Gauss-Legendre nodes and weights on [-1, 1]
constexpr double gl_node = 0.7745966692414834;
constexpr double gl_outer = 5.0 / 9.0;
constexpr double gl_inner = 8.0 / 9.0;

void require_grid(const WaveField& psi, const Grid1D& grid, const char* what) {
    if (!(psi.grid == grid) || psi.values.size() != grid.n_points)
        throw DomainError(std::string(what) + ": wave field does not live on the configured grid");
}

double fd_step(double x) { return 1e-5 * std::max(1.0, std::abs(x)); }

} // namespace

GaugeField GaugeField::static_potential(std::function<double(double)> v) {
    return {[](double, double) { return 0.0; },
            [v = std::move(v)](double x, double) { return v(x); }, 1.0, 1.0};
}

GaugeField GaugeField::free() {
    return static_potential([](double) { return 0.0; });
}

void PropagatorConfig::validate() const {
    grid.validate();
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("dt must be positive");
    if (!(t_final >= t_start)) throw DomainError("t_final must not precede t_start");
    if (!(mass > 0.0)) throw DomainError("mass must be positive");
    if (!(hbar > 0.0)) throw DomainError("hbar must be positive");
    if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
    if (default_units && std::abs(lambda - 4.0 / (hbar * hbar)) > 1e-12 * lambda)
        throw DomainError("lambda must equal 4/hbar^2 under default units");
    if (sample_stride == 0 || snapshot_stride == 0) throw DomainError("strides must be positive");
}

std::size_t PropagatorConfig::steps() const {
    return static_cast<std::size_t>(std::llround((t_final - t_start) / dt));
}

Observables observables(const WaveField& psi) {
    const auto p = psi.density();
    const Grid1D& g = psi.grid;
    Observables o;
    o.norm = integrate(g, p);
    if (!(o.norm > 0.0)) throw DomainError("observables: vanishing wave field");
    double m1 = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) m1 += quadrature_weight(g, i) * g.node(i) * p[i];
    o.mean_x = m1 / o.norm;
    double m2 = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = g.node(i) - o.mean_x;
        m2 += quadrature_weight(g, i) * d * d * p[i];
    }
    o.width = std::sqrt(m2 / o.norm);
    o.fisher_spatial =
        stationary::continuum_fisher(ScalarField{g, p, FieldKind::density}) / o.norm;
    return o;
}

std::vector<double> link_phases(const Grid1D& grid, const GaugeField& fields, double t,
                                double hbar) {
    const double coupling = fields.charge / (hbar * fields.light_speed);
    const double h = grid.spacing;
    std::vector<double> theta(grid.n_points - 1);
    for (std::size_t j = 0; j + 1 < grid.n_points; ++j) {
        const double mid = grid.node(j) + 0.5 * h;
        const double r = 0.5 * h * gl_node;
        const double integral =
            0.5 * h *
            (gl_outer * fields.A(mid - r, t) + gl_inner * fields.A(mid, t) +
             gl_outer * fields.A(mid + r, t));
        theta[j] = coupling * integral;
    }
    return theta;
}

WaveField cn_step(const WaveField& psi, const GaugeField& fields, const PropagatorConfig& config,
                  double t, double dt) {
    const Grid1D& g = config.grid;
    const std::size_t n = g.n_points;
    const std::size_t m = n - 2;
    const double tm = t + 0.5 * dt;
    const double k = config.hbar * config.hbar / (2.0 * config.mass * g.spacing * g.spacing);
    const auto theta = link_phases(g, fields, tm, config.hbar);
    const complex a(0.0, 0.5 * dt / config.hbar);

    // H restricted to interior nodes: row r <-> node r + 1
    std::vector<complex> hd(m), hu(m - 1), hl(m - 1);
    for (std::size_t r = 0; r < m; ++r) hd[r] = 2.0 * k + fields.V(g.node(r + 1), tm);
    for (std::size_t r = 0; r + 1 < m; ++r) {
        hu[r] = -k * std::polar(1.0, -theta[r + 1]);
        hl[r] = -k * std::polar(1.0, theta[r + 1]);
    }

    std::vector<complex> rhs(m);
    for (std::size_t r = 0; r < m; ++r) {
        complex hpsi = hd[r] * psi.values[r + 1];
        if (r + 1 < m) hpsi += hu[r] * psi.values[r + 2];
        if (r > 0) hpsi += hl[r - 1] * psi.values[r];
        rhs[r] = psi.values[r + 1] - a * hpsi;
    }
    std::vector<complex> diag(m), upper(m - 1), lower(m - 1);
    for (std::size_t r = 0; r < m; ++r) diag[r] = 1.0 + a * hd[r];
    for (std::size_t r = 0; r + 1 < m; ++r) {
        upper[r] = a * hu[r];
        lower[r] = a * hl[r];
    }
    linalg::solve_tridiagonal<complex>(lower, diag, upper, rhs);

    WaveField out{g, std::vector<complex>(n, 0.0), psi.normalized};
    std::copy(rhs.begin(), rhs.end(), out.values.begin() + 1);
    return out;
}

double hje_residual_at(const WaveField& before, const WaveField& now, const WaveField& after,
                       double dt, double t, const GaugeField& fields,
                       const PropagatorConfig& config) {
    const Grid1D& g = now.grid;
    const std::size_t n = g.n_points;
    const double h = g.spacing;
    // S = (2/sqrt(lambda)) arg psi; differences of arg taken through ratios so
    // 2 pi jumps between neighbours never alias
    const double to_action = 2.0 / std::sqrt(config.lambda);
    const double qc = fields.charge / fields.light_speed;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const complex z = now.values[i];
        if (std::abs(z) < phase_floor) continue;
        if (std::abs(before.values[i]) < phase_floor || std::abs(after.values[i]) < phase_floor)
            continue;
        const double s_t =
            to_action * std::arg(after.values[i] * std::conj(before.values[i])) / (2.0 * dt);
        double s_x;
        if (i == 0 || i + 1 == n) {
            const std::size_t lo = i == 0 ? 0 : n - 2;
            const complex l = now.values[lo], r = now.values[lo + 1];
            if (std::abs(l) < phase_floor || std::abs(r) < phase_floor) continue;
            s_x = to_action * std::arg(r * std::conj(l)) / h;
        } else {
            const complex l = now.values[i - 1], r = now.values[i + 1];
            if (std::abs(l) < phase_floor || std::abs(r) < phase_floor) {
                // fall back to the one-sided difference on the defined side
                const bool left = std::abs(l) >= phase_floor;
                const complex o = left ? l : r;
                if (std::abs(o) < phase_floor) continue;
                s_x = to_action * (left ? std::arg(z * std::conj(o)) : std::arg(o * std::conj(z))) / h;
            } else {
                s_x = to_action * std::arg(r * std::conj(l)) / (2.0 * h);
            }
        }
        const double x = g.node(i);
        const double kin = s_x - qc * fields.A(x, t);
        acc += quadrature_weight(g, i) * std::norm(z) *
               (s_t + kin * kin / (2.0 * config.mass) + fields.V(x, t));
    }
    return acc;
}

std::vector<double> avg_hje_residual(const std::vector<WaveField>& snapshots,
                                     const std::vector<double>& times, const GaugeField& fields,
                                     const PropagatorConfig& config) {
    if (snapshots.size() < 3 || times.size() != snapshots.size())
        throw DomainError("avg_hje_residual needs at least 3 snapshots with matching times");
    std::vector<double> out;
    out.reserve(snapshots.size() - 2);
    for (std::size_t k = 1; k + 1 < snapshots.size(); ++k) {
        const double dt_left = times[k] - times[k - 1];
        const double dt_right = times[k + 1] - times[k];
        if (std::abs(dt_left - dt_right) > 1e-9 * std::max(std::abs(dt_left), 1e-300))
            throw DomainError("avg_hje_residual needs uniformly spaced snapshots");
        out.push_back(hje_residual_at(snapshots[k - 1], snapshots[k], snapshots[k + 1],
                                      0.5 * (dt_left + dt_right), times[k], fields, config));
    }
    return out;
}

Propagation propagate(const WaveField& psi0, const GaugeField& fields,
                      const PropagatorConfig& config) {
    config.validate();
    require_grid(psi0, config.grid, "propagate");
    const std::size_t steps = config.steps();

    Propagation run;
    WaveField psi = psi0;
    psi.values.front() = 0.0;
    psi.values.back() = 0.0;
    const double norm0 = psi.norm();
    if (!(norm0 > 0.0)) throw DomainError("propagate: vanishing initial state");

    auto sample = [&](double t) {
        const Observables o = observables(psi);
        const WaveField back = cn_step(psi, fields, config, t, -config.dt);
        const WaveField fwd = cn_step(psi, fields, config, t, config.dt);
        auto& tr = run.trace;
        tr.times.push_back(t);
        tr.norm.push_back(o.norm);
        tr.mean_x.push_back(o.mean_x);
        tr.width.push_back(o.width);
        tr.fisher_spatial.push_back(o.fisher_spatial);
        tr.hje_residual.push_back(hje_residual_at(back, psi, fwd, config.dt, t, fields, config));
    };
    auto snapshot = [&](double t) {
        run.snapshots.push_back(psi);
        run.snapshot_times.push_back(t);
    };

    sample(config.t_start);
    if (config.keep_snapshots) snapshot(config.t_start);
    for (std::size_t s = 0; s < steps; ++s) {
        const double t = config.t_start + static_cast<double>(s) * config.dt;
        psi = cn_step(psi, fields, config, t, config.dt);
        const double now = config.t_start + static_cast<double>(s + 1) * config.dt;
        const double drift = std::abs(psi.norm() - norm0);
        if (!(drift <= 1e-6))
            throw StabilityError("norm drift " + std::to_string(drift) + " at t = " +
                                 std::to_string(now));
        const bool last = s + 1 == steps;
        if ((s + 1) % config.sample_stride == 0 || last) sample(now);
        if (config.keep_snapshots && ((s + 1) % config.snapshot_stride == 0 || last))
            snapshot(now);
    }
    run.final_state = std::move(psi);
    return run;
}

std::pair<WaveField, GaugeField> gauge_transform(const WaveField& psi, const GaugeField& fields,
                                                 const SpaceTimeFn& chi, double t, double lambda) {
    if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
    const double q = fields.charge;
    const double c = fields.light_speed;
    const double phase_scale = q * std::sqrt(lambda) / (2.0 * c);

    WaveField out = psi;
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] *= std::polar(1.0, phase_scale * chi(psi.grid.node(i), t));

    GaugeField moved = fields;
    moved.A = [a = fields.A, chi](double x, double tt) {
        const double s = fd_step(x);
        return a(x, tt) + (chi(x + s, tt) - chi(x - s, tt)) / (2.0 * s);
    };
    moved.V = [v = fields.V, chi, qc = q / c](double x, double tt) {
        const double s = fd_step(tt);
        return v(x, tt) - qc * (chi(x, tt + s) - chi(x, tt - s)) / (2.0 * s);
    };
    return {std::move(out), std::move(moved)};
}

GaugeGap gauge_covariance_gap(const WaveField& psi0, const GaugeField& fields,
                              const SpaceTimeFn& chi, const PropagatorConfig& config) {
    PropagatorConfig quiet = config;
    quiet.keep_snapshots = false;
    quiet.sample_stride = std::max<std::size_t>(config.steps(), 1);

    const auto plain = propagate(psi0, fields, quiet);
    const auto a = gauge_transform(plain.final_state, fields, chi, config.t_final, config.lambda).first;
    const auto [start, moved] = gauge_transform(psi0, fields, chi, config.t_start, config.lambda);
    const auto b = propagate(start, moved, quiet).final_state;

    complex overlap = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) overlap += std::conj(b.values[i]) * a.values[i];
    const complex align = std::abs(overlap) > 0.0 ? overlap / std::abs(overlap) : complex(1.0);
    GaugeGap gap;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        gap.density_gap =
            std::max(gap.density_gap, std::abs(std::norm(a.values[i]) - std::norm(b.values[i])));
        gap.wave_gap = std::max(gap.wave_gap, std::abs(a.values[i] - align * b.values[i]));
    }
    return gap;
}

FunctionalQ tdse_functional_Q(const std::vector<WaveField>& snapshots,
                              const std::vector<double>& times, const GaugeField& fields,
                              const PropagatorConfig& config) {
    const std::size_t nt = snapshots.size();
    if (nt < 2 || times.size() != nt)
        throw DomainError("tdse_functional_Q needs at least 2 snapshots with matching times");
    const Grid1D& g = config.grid;
    for (const auto& s : snapshots) require_grid(s, g, "tdse_functional_Q");
    const double h = g.spacing;
    const double m = config.mass;
    const double lam = config.lambda;
    const double root = std::sqrt(lam);
    // q sqrt(lambda) / 2c equals q / (hbar c) with hbar = 2 / sqrt(lambda)
    const double hbar_eff = 2.0 / root;

    FunctionalQ q;
    for (std::size_t k = 0; k < nt; ++k) {
        double wt;
        if (nt == 1)
            wt = 0.0;
        else if (k == 0)
            wt = 0.5 * (times[1] - times[0]);
        else if (k + 1 == nt)
            wt = 0.5 * (times[k] - times[k - 1]);
        else
            wt = 0.5 * (times[k + 1] - times[k - 1]);

        const auto& psi = snapshots[k].values;
        const std::size_t lo = k == 0 ? 0 : k - 1;
        const std::size_t hi = k + 1 == nt ? k : k + 1;
        const double span = times[hi] - times[lo];
        const auto& a = snapshots[lo].values;
        const auto& b = snapshots[hi].values;

        // i (psi conj(psi_t) - conj(psi) psi_t) = 2 Im(conj(psi) psi_t)
        double time_part = 0.0, pot_part = 0.0;
        for (std::size_t i = 0; i < g.n_points; ++i) {
            const complex dpsi = (b[i] - a[i]) / span;
            const double w = quadrature_weight(g, i);
            time_part += w * 2.0 * std::imag(std::conj(psi[i]) * dpsi);
            pot_part += w * fields.V(g.node(i), times[k]) * std::norm(psi[i]);
        }
        const auto theta = link_phases(g, fields, times[k], hbar_eff);
        double grad_part = 0.0;
        for (std::size_t j = 0; j + 1 < g.n_points; ++j)
            grad_part += std::norm(std::polar(1.0, -theta[j]) * psi[j + 1] - psi[j]);
        grad_part /= h;

        q.time_term += wt * 2.0 * m * root * time_part;
        q.gradient_term += wt * 4.0 * grad_part;
        q.potential_term += wt * 2.0 * m * lam * pot_part;
    }
    q.total = q.time_term + q.gradient_term + q.potential_term;
    return q;
}

} // namespace robustqm::dynamic
