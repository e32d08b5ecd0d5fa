#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace robustqm::inference {

using Vector = std::vector<double>;

/// Maps a parameter vector to outcome probabilities (same order as the
/// table's outcome labels).
using Generator = std::function<Vector(std::span<const double>)>;

inline constexpr double normalization_tolerance = 1e-12;
inline constexpr double positivity_floor = 1e-12;
inline constexpr double default_theta_step = 1e-5;

/**
 * Finite conditional probability table P(o | theta, Z).
 *
 * A table is either fixed (generator empty) or a member of a parametric
 * family, in which case `prob` holds the generator evaluated at `parameter`
 * and at() re-evaluates it elsewhere.
 */
struct OutcomeTable {
    std::vector<std::string> outcomes;
    Vector prob;
    Vector parameter;
    std::string condition_tag;
    Generator generator;

    static OutcomeTable fixed(std::vector<std::string> outcomes, Vector prob,
                              std::string condition_tag = {});
    static OutcomeTable family(std::vector<std::string> outcomes, Generator generator,
                               Vector theta, std::string condition_tag = {});

    bool is_family() const noexcept { return static_cast<bool>(generator); }
    OutcomeTable at(std::span<const double> theta) const;

    std::size_t size() const noexcept { return outcomes.size(); }
    std::size_t index_of(std::string_view outcome) const;
    double operator[](std::string_view outcome) const { return prob[index_of(outcome)]; }
};

/// Observed occupation numbers n_o, labelled by outcome.
struct CountRecord {
    std::vector<std::string> outcomes;
    std::vector<std::uint64_t> counts;

    std::uint64_t total() const noexcept;
    std::uint64_t operator[](std::string_view outcome) const;
};

enum class ViolationKind {
    too_few_outcomes,
    size_mismatch,
    non_finite,
    negative_probability,
    normalization,
    complement_rule,
};

struct Violation {
    ViolationKind kind;
    std::string detail;
};

/// Empty result iff the table obeys normalization, nonnegativity and the
/// complement rule within 1e-12. Never throws.
std::vector<Violation> validate_table(const OutcomeTable& table);

std::string to_string(ViolationKind kind);

/// N! prod_o p_o^{n_o} / n_o!. Throws DomainError when an observed outcome
/// has zero probability. Evaluated in log space for N > 100.
double multinomial_iprob(const CountRecord& counts, const OutcomeTable& table);

/// Natural log of multinomial_iprob; -inf when an observed outcome has zero
/// probability.
double log_multinomial_iprob(const CountRecord& counts, const OutcomeTable& table);

/// Ev = sum_o n_o ln(p1(o)/p0(o)).
double log_evidence(const CountRecord& counts, const OutcomeTable& h1, const OutcomeTable& h0);

/// Same, with real-valued occupation weights aligned to the tables' outcome
/// order (used for the robust substitution n_o = N p(o|theta)).
double log_evidence(std::span<const double> weights, const OutcomeTable& h1,
                    const OutcomeTable& h0);

struct FisherOptions {
    double theta_step = default_theta_step;
    double floor = positivity_floor;
};

struct FisherReport {
    Eigen::MatrixXd matrix;
    Vector parameter;
    std::vector<std::string> excluded_outcomes;

    double min_eigenvalue() const;
    /// epsilon^T I epsilon
    double quadratic_form(std::span<const double> epsilon) const;
};

/// I_ij = sum_o (1/p) dp/dtheta_i dp/dtheta_j with central differences.
FisherReport fisher_discrete(const OutcomeTable& family, std::span<const double> theta,
                             const FisherOptions& options = {});

struct EvidenceReport {
    double log_evidence = 0.0;
    Vector epsilon;
    double quadratic_prediction = 0.0;
    /// Leading cubic term N/6 |d^3/ds^3 sum_o p_o ln p_o(theta + s e)| |eps|^3,
    /// e the unit displacement; an estimate of the remainder, not a rigorous bound.
    double cubic_remainder_bound = 0.0;
};

/// Evidence of theta + epsilon against theta with the robust counts
/// n_o = N p(o|theta), next to its quadratic prediction -(N/2) eps^T I eps.
EvidenceReport evidence_quadratic(const OutcomeTable& family, std::span<const double> theta,
                                  std::span<const double> epsilon, double trials,
                                  const FisherOptions& options = {});

struct EvidenceBound {
    double lower = 0.0;           ///< always 0
    double middle = 0.0;          ///< eps^T I eps
    double cauchy_schwarz = 0.0;  ///< |eps|^2 tr I
    double upper = 0.0;           ///< d max_i eps_i^2 tr I
    bool pass = false;
};

EvidenceBound evidence_bound_check(const OutcomeTable& family, std::span<const double> theta,
                                   std::span<const double> epsilon,
                                   const FisherOptions& options = {});

using Composition = std::vector<std::uint32_t>;

struct MaximizerBounds {
    Composition counts;
    Vector lower;     ///< n_j / (N + m - 1)
    Vector upper;     ///< (n_j + 1) / (N + 1)
    Vector assigned;  ///< n_j / (N + 1)
    Vector frequency; ///< n_j / N
    bool holds = false;
};

struct AppendixAReport {
    std::uint32_t trials = 0;
    std::uint64_t compositions = 0;
    double max_log_iprob = 0.0;
    std::vector<MaximizerBounds> maximizers;
    bool all_bounds_hold = false;
};

inline constexpr std::uint64_t default_composition_cap = 10'000'000;

/// Number of compositions of n into m nonnegative parts, saturating at
/// UINT64_MAX.
std::uint64_t composition_count(std::uint32_t n, std::uint32_t m);

/// Brute-force argmax set of the multinomial i-prob over all compositions of
/// N, with the frequency bounds checked for each maximizer.
AppendixAReport appendix_a_suite(std::span<const double> probs, std::uint32_t trials,
                                 std::uint64_t cap = default_composition_cap);

/// The frequency assignments for observed counts: n_j/(N+1) and n_j/N.
MaximizerBounds frequency_assignment(std::span<const std::uint32_t> counts,
                                     std::span<const double> probs = {});

} // namespace robustqm::inference
