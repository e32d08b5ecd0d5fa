#include "robustqm/eprb.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "robustqm/errors.hpp"
#include "robustqm/parallel.hpp"
#include "robustqm/rng.hpp"

namespace robustqm::eprb {

using inference::OutcomeTable;

double dot(const Vec3& a, const Vec3& b) noexcept {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

double norm(const Vec3& a) noexcept { return std::sqrt(dot(a, a)); }

RouterSetting RouterSetting::in_xz_plane(double theta) {
    return {{0.0, 0.0, 1.0}, {std::sin(theta), 0.0, std::cos(theta)}};
}

bool RouterSetting::is_valid() const noexcept {
    return std::abs(norm(a1) - 1.0) <= 1e-12 && std::abs(norm(a2) - 1.0) <= 1e-12;
}

double RouterSetting::angle() const noexcept {
    return std::acos(std::clamp(dot(a1, a2), -1.0, 1.0));
}

double PairCounts::correlation() const {
    const auto n = total();
    if (n == 0) throw EmptyData("no events");
    const double same = static_cast<double>(n_pp) + static_cast<double>(n_mm);
    const double diff = static_cast<double>(n_pm) + static_cast<double>(n_mp);
    return (same - diff) / static_cast<double>(n);
}

double PairCounts::mean_x() const {
    const auto n = total();
    if (n == 0) throw EmptyData("no events");
    const double plus = static_cast<double>(n_pp) + static_cast<double>(n_pm);
    const double minus = static_cast<double>(n_mp) + static_cast<double>(n_mm);
    return (plus - minus) / static_cast<double>(n);
}

double PairCounts::mean_y() const {
    const auto n = total();
    if (n == 0) throw EmptyData("no events");
    const double plus = static_cast<double>(n_pp) + static_cast<double>(n_mp);
    const double minus = static_cast<double>(n_pm) + static_cast<double>(n_mm);
    return (plus - minus) / static_cast<double>(n);
}

inference::CountRecord PairCounts::to_record() const {
    return {pair_outcomes(), {n_pp, n_pm, n_mp, n_mm}};
}

PairCounts& PairCounts::operator+=(const PairCounts& other) noexcept {
    n_pp += other.n_pp;
    n_pm += other.n_pm;
    n_mp += other.n_mp;
    n_mm += other.n_mm;
    return *this;
}

CorrelationModel CorrelationModel::singlet() {
    return {ModelKind::singlet, 1, std::numbers::pi, {1.0, 1.0, 1.0}};
}

CorrelationModel CorrelationModel::triplet_z0() {
    return {ModelKind::triplet_z0, 1, 0.0, {1.0, -1.0, 1.0}};
}

CorrelationModel CorrelationModel::general(int K, double phi) {
    return {ModelKind::general, K, phi, {1.0, 1.0, 1.0}};
}

void CorrelationModel::validate() const {
    if (K < 1) throw InvalidModel("K must be a positive integer, got " + std::to_string(K));
    if (phi != 0.0 && phi != std::numbers::pi)
        throw InvalidModel("phi must be 0 or pi");
    if (kind == ModelKind::triplet_z0)
        for (double s : metric)
            if (s != 1.0 && s != -1.0) throw InvalidModel("metric entries must be +1 or -1");
}

double CorrelationModel::correlation(double theta) const {
    switch (kind) {
    case ModelKind::singlet: return -std::cos(theta);
    case ModelKind::triplet_z0:
        return model_correlation(RouterSetting::in_xz_plane(theta), *this);
    case ModelKind::general: return std::cos(K * theta + phi);
    }
    return 0.0;
}

EventStatistics accumulate_statistics(std::span<const std::pair<int, int>> events) {
    if (events.empty()) throw EmptyData("no events to accumulate");
    EventStatistics s;
    long long sx = 0, sy = 0, sxy = 0;
    for (auto [x, y] : events) {
        if ((x != 1 && x != -1) || (y != 1 && y != -1))
            throw DomainError("event values must be +1 or -1");
        sx += x;
        sy += y;
        sxy += x * y;
        // Kronecker-delta tally
        s.counts.n_pp += (x == 1 && y == 1);
        s.counts.n_pm += (x == 1 && y == -1);
        s.counts.n_mp += (x == -1 && y == 1);
        s.counts.n_mm += (x == -1 && y == -1);
    }
    const double n = static_cast<double>(events.size());
    s.mean_x = static_cast<double>(sx) / n;
    s.mean_y = static_cast<double>(sy) / n;
    s.correlation = static_cast<double>(sxy) / n;
    return s;
}

Decomposition decompose(const OutcomeTable& table) {
    if (auto v = inference::validate_table(table); !v.empty())
        throw DomainError("invalid pair table: " + inference::to_string(v.front().kind) + " (" +
                          v.front().detail + ")");
    const double pp = table["++"], pm = table["+-"], mp = table["-+"], mm = table["--"];
    Decomposition d;
    d.e0 = pp + pm + mp + mm;
    d.e1 = pp + pm - mp - mm;
    d.e2 = pp - pm + mp - mm;
    d.e12 = pp - pm - mp + mm;
    return d;
}

OutcomeTable recompose(const Decomposition& d) {
    auto p = [&](double x, double y) { return (d.e0 + x * d.e1 + y * d.e2 + x * y * d.e12) / 4.0; };
    return OutcomeTable::fixed(pair_outcomes(), {p(1, 1), p(1, -1), p(-1, 1), p(-1, -1)});
}

namespace {

OutcomeTable table_from_correlation(double e12) {
    if (!(std::abs(e12) <= 1.0))
        throw InvalidModel("|E12| exceeds 1: " + std::to_string(e12));
    // (1 + xy E)/4: equal entries for equal xy, so both marginals are
    // exactly (1 + E)/4 + (1 - E)/4.
    const double same = (1.0 + e12) / 4.0;
    const double diff = (1.0 - e12) / 4.0;
    return OutcomeTable::fixed(pair_outcomes(), {same, diff, diff, same});
}

} // namespace

OutcomeTable pair_table(double theta, const CorrelationModel& model) {
    model.validate();
    auto t = table_from_correlation(model.correlation(theta));
    t.parameter = {theta};
    return t;
}

OutcomeTable pair_table(const RouterSetting& setting, const CorrelationModel& model) {
    model.validate();
    auto t = table_from_correlation(model_correlation(setting, model));
    t.parameter = {setting.angle()};
    return t;
}

OutcomeTable pair_family(const CorrelationModel& model, double theta) {
    model.validate();
    return OutcomeTable::family(
        pair_outcomes(),
        [model](std::span<const double> th) {
            return table_from_correlation(model.correlation(th[0])).prob;
        },
        {theta}, "eprb");
}

double model_correlation(const RouterSetting& setting, const CorrelationModel& model) {
    switch (model.kind) {
    case ModelKind::singlet: return std::clamp(-dot(setting.a1, setting.a2), -1.0, 1.0);
    case ModelKind::triplet_z0: {
        const auto& a = setting.a1;
        const auto& b = setting.a2;
        const auto& g = model.metric;
        return std::clamp(g[0] * a[0] * b[0] + g[1] * a[1] * b[1] + g[2] * a[2] * b[2], -1.0,
                          1.0);
    }
    case ModelKind::general: return std::cos(model.K * setting.angle() + model.phi);
    }
    return 0.0;
}

RobustCurve solve_robust_ode(double fisher, double phi, std::span<const double> theta_grid,
                             double max_step) {
    if (!(fisher > 0.0))
        throw DomainError("I_F must be positive; the constant solution is excluded");
    if (theta_grid.empty()) return {};
    if (theta_grid.front() < 0.0) throw DomainError("theta grid must start at or after 0");
    for (std::size_t i = 1; i < theta_grid.size(); ++i)
        if (!(theta_grid[i] > theta_grid[i - 1]))
            throw DomainError("theta grid must be strictly increasing");

    // (E')^2 = I (1 - E^2) differentiated gives E'' = -I E, whose solutions
    // pass the turning points |E| = 1 smoothly; the slope sign is carried by
    // continuity. After each step the state is projected back onto the
    // first integral E^2 + (E')^2 / I = 1.
    const double root = std::sqrt(fisher);
    double e = std::cos(phi);
    double v = -root * std::sin(phi);

    auto project = [&] {
        if (std::abs(e) > 1.0 + 1e-9)
            throw BranchError("|E| = " + std::to_string(std::abs(e)) + " exceeds 1");
        const double r = std::sqrt(e * e + v * v / fisher);
        e /= r;
        v /= r;
        if (1.0 - e * e < 1e-12) {
            e = std::clamp(e, -1.0, 1.0);
            // at the turning point the slope magnitude is set by the first
            // integral; keep the sign the dynamics selected
            const double mag = root * std::sqrt(std::max(0.0, 1.0 - e * e));
            v = std::copysign(mag, v);
        }
    };

    auto rk4 = [&](double h) {
        const double k1e = v, k1v = -fisher * e;
        const double k2e = v + 0.5 * h * k1v, k2v = -fisher * (e + 0.5 * h * k1e);
        const double k3e = v + 0.5 * h * k2v, k3v = -fisher * (e + 0.5 * h * k2e);
        const double k4e = v + h * k3v, k4v = -fisher * (e + h * k3e);
        e += h / 6.0 * (k1e + 2 * k2e + 2 * k3e + k4e);
        v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
        project();
    };

    RobustCurve curve;
    curve.theta.assign(theta_grid.begin(), theta_grid.end());
    curve.e12.reserve(theta_grid.size());
    double at = 0.0;
    for (double target : theta_grid) {
        const double gap = target - at;
        if (gap > 0.0) {
            const auto steps = static_cast<std::size_t>(std::ceil(gap / max_step));
            const double h = gap / static_cast<double>(steps);
            for (std::size_t s = 0; s < steps; ++s) rk4(h);
            at = target;
        }
        curve.e12.push_back(e);
    }
    return curve;
}

namespace {

PairCounts simulate_from_table(const OutcomeTable& table, std::uint64_t trials,
                               std::uint64_t seed) {
    const double c0 = table.prob[0];
    const double c1 = c0 + table.prob[1];
    const double c2 = c1 + table.prob[2];
    const std::size_t workers = worker_count();
    std::vector<PairCounts> partial(std::max<std::size_t>(workers, 1));
    parallel_chunks(
        trials,
        [&](std::size_t w, std::size_t begin, std::size_t end) {
            PairCounts local;
            for (std::size_t i = begin; i < end; ++i) {
                CounterRng rng(seed, i);
                const double u = rng.uniform();
                if (u < c0)
                    ++local.n_pp;
                else if (u < c1)
                    ++local.n_pm;
                else if (u < c2)
                    ++local.n_mp;
                else
                    ++local.n_mm;
            }
            partial[w] = local;
        },
        workers);
    PairCounts total;
    for (const auto& p : partial) total += p;
    return total;
}

} // namespace

PairCounts simulate_pairs(double theta, const CorrelationModel& model, std::uint64_t trials,
                          std::uint64_t seed) {
    if (trials < 1) throw DomainError("need at least one trial");
    return simulate_from_table(pair_table(theta, model), trials, seed);
}

PairCounts simulate_pairs(const RouterSetting& setting, const CorrelationModel& model,
                          std::uint64_t trials, std::uint64_t seed) {
    if (trials < 1) throw DomainError("need at least one trial");
    return simulate_from_table(pair_table(setting, model), trials, seed);
}

} // namespace robustqm::eprb
