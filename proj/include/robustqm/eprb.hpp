#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "robustqm/inference.hpp"

namespace robustqm::eprb {

using Vec3 = std::array<double, 3>;

double dot(const Vec3& a, const Vec3& b) noexcept;
double norm(const Vec3& a) noexcept;

/// Laboratory-frame router directions a1, a2 (unit vectors).
struct RouterSetting {
    Vec3 a1{0.0, 0.0, 1.0};
    Vec3 a2{0.0, 0.0, 1.0};

    /// a1 = z, a2 in the x-z plane at angle theta from z.
    static RouterSetting in_xz_plane(double theta);

    bool is_valid() const noexcept;
    /// arccos(a1.a2) with the dot product clamped to [-1, 1].
    double angle() const noexcept;
};

/// Coincidence counts n_xy for x, y = +1/-1.
struct PairCounts {
    std::uint64_t n_pp = 0, n_pm = 0, n_mp = 0, n_mm = 0;

    std::uint64_t total() const noexcept { return n_pp + n_pm + n_mp + n_mm; }
    /// (n_pp + n_mm - n_pm - n_mp) / N
    double correlation() const;
    double mean_x() const;
    double mean_y() const;
    inference::CountRecord to_record() const;

    PairCounts& operator+=(const PairCounts& other) noexcept;
    bool operator==(const PairCounts&) const = default;
};

/// Moments of a joint table over {-1,+1}^2.
struct Decomposition {
    double e0 = 1.0, e1 = 0.0, e2 = 0.0, e12 = 0.0;
};

enum class ModelKind { singlet, triplet_z0, general };

/**
 * E12 solution family. `singlet` is cos(theta + pi), `general` is
 * cos(K theta + phi); `triplet_z0` contracts the router directions with the
 * diagonal `metric` (+, -, + for the m = 0 triplet).
 */
struct CorrelationModel {
    ModelKind kind = ModelKind::singlet;
    int K = 1;
    double phi = 3.14159265358979323846;
    Vec3 metric{1.0, -1.0, 1.0};

    static CorrelationModel singlet();
    static CorrelationModel triplet_z0();
    static CorrelationModel general(int K, double phi);

    /// Throws InvalidModel unless K >= 1 and phi is 0 or pi.
    void validate() const;
    /// E12 as a function of the router angle; for triplet_z0 the routers
    /// are taken in the x-z plane.
    double correlation(double theta) const;
};

/// Pair outcome labels in table order.
inline const std::vector<std::string>& pair_outcomes() {
    static const std::vector<std::string> labels{"++", "+-", "-+", "--"};
    return labels;
}

struct EventStatistics {
    double mean_x = 0.0;
    double mean_y = 0.0;
    double correlation = 0.0;
    PairCounts counts;
};

/// Averages, correlation and coincidence tallies of (x, y) events.
EventStatistics accumulate_statistics(std::span<const std::pair<int, int>> events);

Decomposition decompose(const inference::OutcomeTable& table);
/// P(x, y) = (e0 + x e1 + y e2 + x y e12) / 4 in pair_outcomes() order.
inference::OutcomeTable recompose(const Decomposition& d);

/// P(x, y) = (1 + x y E12(theta)) / 4.
inference::OutcomeTable pair_table(double theta, const CorrelationModel& model);
inference::OutcomeTable pair_table(const RouterSetting& setting, const CorrelationModel& model);

/// Parametric family theta -> pair_table(theta, model), usable with the
/// Fisher and evidence machinery.
inference::OutcomeTable pair_family(const CorrelationModel& model, double theta);

double model_correlation(const RouterSetting& setting, const CorrelationModel& model);

struct RobustCurve {
    std::vector<double> theta;
    std::vector<double> e12;
};

/// Integrates (E')^2 = I_F (1 - E^2) from E(theta_0) = cos(phi + sqrt(I_F) theta_0)
/// with RK4 on the branch selected by continuity. The grid is refined
/// internally so no step exceeds max_step.
RobustCurve solve_robust_ode(double fisher, double phi, std::span<const double> theta_grid,
                             double max_step = 1e-3);

/// Draws N pairs from pair_table(theta, model). Trial i uses its own
/// counter-based stream (seed, i), so counts do not depend on the worker
/// count.
PairCounts simulate_pairs(double theta, const CorrelationModel& model, std::uint64_t trials,
                          std::uint64_t seed);
PairCounts simulate_pairs(const RouterSetting& setting, const CorrelationModel& model,
                          std::uint64_t trials, std::uint64_t seed);

} // namespace robustqm::eprb
