#include "robustqm/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "robustqm/errors.hpp"

namespace robustqm::inference {

namespace {

Vector evaluate(const OutcomeTable& family, std::span<const double> theta) {
    if (!family.is_family())
        throw DomainError("table has no generator; cannot evaluate at another parameter");
    Vector p = family.generator(theta);
    if (p.size() != family.outcomes.size())
        throw DomainError("generator returned " + std::to_string(p.size()) +
                          " probabilities for " + std::to_string(family.outcomes.size()) +
                          " outcomes");
    return p;
}

std::vector<std::size_t> align(const CountRecord& counts, const OutcomeTable& table) {
    if (counts.outcomes.size() != counts.counts.size())
        throw DomainError("count record has mismatched label and count arrays");
    std::vector<std::size_t> idx(counts.outcomes.size());
    for (std::size_t k = 0; k < counts.outcomes.size(); ++k)
        idx[k] = table.index_of(counts.outcomes[k]);
    return idx;
}

double log_factorial(std::uint64_t n) { return std::lgamma(static_cast<double>(n) + 1.0); }

// Central-difference Jacobian dp_o/dtheta_i, outcomes in rows.
Eigen::MatrixXd jacobian(const OutcomeTable& family, std::span<const double> theta,
                         double step) {
    const std::size_t m = family.size();
    const std::size_t d = theta.size();
    Eigen::MatrixXd jac(m, d);
    Vector shifted(theta.begin(), theta.end());
    for (std::size_t i = 0; i < d; ++i) {
        const double h = step * std::max(1.0, std::abs(theta[i]));
        shifted[i] = theta[i] + h;
        Vector plus = evaluate(family, shifted);
        shifted[i] = theta[i] - h;
        Vector minus = evaluate(family, shifted);
        shifted[i] = theta[i];
        // divide by the representable step actually taken
        const double span = (theta[i] + h) - (theta[i] - h);
        for (std::size_t o = 0; o < m; ++o) jac(o, i) = (plus[o] - minus[o]) / span;
    }
    return jac;
}

} // namespace

OutcomeTable OutcomeTable::fixed(std::vector<std::string> outcomes, Vector prob,
                                 std::string condition_tag) {
    OutcomeTable t;
    t.outcomes = std::move(outcomes);
    t.prob = std::move(prob);
    t.condition_tag = std::move(condition_tag);
    return t;
}

OutcomeTable OutcomeTable::family(std::vector<std::string> outcomes, Generator generator,
                                  Vector theta, std::string condition_tag) {
    OutcomeTable t;
    t.outcomes = std::move(outcomes);
    t.generator = std::move(generator);
    t.condition_tag = std::move(condition_tag);
    t.prob = evaluate(t, theta);
    t.parameter = std::move(theta);
    return t;
}

OutcomeTable OutcomeTable::at(std::span<const double> theta) const {
    OutcomeTable t = *this;
    t.prob = evaluate(*this, theta);
    t.parameter.assign(theta.begin(), theta.end());
    return t;
}

std::size_t OutcomeTable::index_of(std::string_view outcome) const {
    auto it = std::find(outcomes.begin(), outcomes.end(), outcome);
    if (it == outcomes.end())
        throw DomainError("outcome '" + std::string(outcome) + "' not in table");
    return static_cast<std::size_t>(it - outcomes.begin());
}

std::uint64_t CountRecord::total() const noexcept {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

std::uint64_t CountRecord::operator[](std::string_view outcome) const {
    auto it = std::find(outcomes.begin(), outcomes.end(), outcome);
    if (it == outcomes.end()) return 0;
    return counts[static_cast<std::size_t>(it - outcomes.begin())];
}

std::string to_string(ViolationKind kind) {
    switch (kind) {
    case ViolationKind::too_few_outcomes: return "too_few_outcomes";
    case ViolationKind::size_mismatch: return "size_mismatch";
    case ViolationKind::non_finite: return "non_finite";
    case ViolationKind::negative_probability: return "negative_probability";
    case ViolationKind::normalization: return "normalization";
    case ViolationKind::complement_rule: return "complement_rule";
    }
    return "unknown";
}

std::vector<Violation> validate_table(const OutcomeTable& table) {
    std::vector<Violation> out;
    const std::size_t m = table.outcomes.size();
    if (m < 2) out.push_back({ViolationKind::too_few_outcomes, "m = " + std::to_string(m)});
    if (table.prob.size() != m) {
        out.push_back({ViolationKind::size_mismatch,
                       std::to_string(table.prob.size()) + " probabilities for " +
                           std::to_string(m) + " outcomes"});
        return out;
    }
    for (std::size_t o = 0; o < m; ++o) {
        if (!std::isfinite(table.prob[o])) {
            out.push_back({ViolationKind::non_finite, table.outcomes[o]});
            return out;
        }
        if (table.prob[o] < 0.0)
            out.push_back({ViolationKind::negative_probability, table.outcomes[o]});
    }
    const double total = std::accumulate(table.prob.begin(), table.prob.end(), 0.0);
    if (std::abs(total - 1.0) > normalization_tolerance) {
        std::ostringstream os;
        os.precision(17);
        os << "sum = " << total;
        out.push_back({ViolationKind::normalization, os.str()});
        return out;
    }
    // Complement rule over every subset for small tables, over singletons
    // and prefixes otherwise.
    auto check = [&](auto&& in_subset, const std::string& label) {
        double a = 0.0, abar = 0.0;
        for (std::size_t o = 0; o < m; ++o) (in_subset(o) ? a : abar) += table.prob[o];
        if (std::abs(a + abar - 1.0) > normalization_tolerance) {
            out.push_back({ViolationKind::complement_rule, label});
            return false;
        }
        return true;
    };
    if (m <= 12) {
        for (std::uint32_t mask = 1; mask + 1 < (1u << m); ++mask)
            if (!check([mask](std::size_t o) { return (mask >> o) & 1u; },
                       "subset mask " + std::to_string(mask)))
                break;
    } else {
        for (std::size_t k = 0; k < m; ++k) {
            if (!check([k](std::size_t o) { return o == k; }, "{" + table.outcomes[k] + "}")) break;
            if (!check([k](std::size_t o) { return o <= k; }, "prefix " + std::to_string(k))) break;
        }
    }
    return out;
}

double log_multinomial_iprob(const CountRecord& counts, const OutcomeTable& table) {
    auto idx = align(counts, table);
    const std::uint64_t n = counts.total();
    double acc = log_factorial(n);
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const std::uint64_t nk = counts.counts[k];
        if (nk == 0) continue;
        const double p = table.prob[idx[k]];
        if (p <= 0.0) return -std::numeric_limits<double>::infinity();
        acc += static_cast<double>(nk) * std::log(p) - log_factorial(nk);
    }
    return acc;
}

double multinomial_iprob(const CountRecord& counts, const OutcomeTable& table) {
    auto idx = align(counts, table);
    for (std::size_t k = 0; k < idx.size(); ++k)
        if (counts.counts[k] > 0 && table.prob[idx[k]] <= 0.0)
            throw DomainError("outcome '" + counts.outcomes[k] +
                              "' observed but has zero probability");
    const std::uint64_t n = counts.total();
    if (n > 100) return std::exp(log_multinomial_iprob(counts, table));

    // Direct product, interleaving the factorial ratio with the powers so no
    // intermediate overflows for N <= 100.
    double value = 1.0;
    std::uint64_t numer = n;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const double p = table.prob[idx[k]];
        for (std::uint64_t j = 1; j <= counts.counts[k]; ++j) {
            value *= static_cast<double>(numer--) / static_cast<double>(j);
            value *= p;
        }
    }
    return value;
}

double log_evidence(std::span<const double> weights, const OutcomeTable& h1,
                    const OutcomeTable& h0) {
    if (weights.size() != h1.size() || weights.size() != h0.size())
        throw DomainError("evidence weights and tables disagree in size");
    double ev = 0.0;
    for (std::size_t o = 0; o < weights.size(); ++o) {
        if (weights[o] == 0.0) continue;
        const double p1 = h1.prob[o];
        const double p0 = h0.prob[o];
        if (p1 <= 0.0 || p0 <= 0.0)
            throw DomainError("outcome '" + h1.outcomes[o] +
                              "' has nonzero weight but zero probability under a hypothesis");
        ev += weights[o] * (std::log(p1) - std::log(p0));
    }
    return ev;
}

double log_evidence(const CountRecord& counts, const OutcomeTable& h1, const OutcomeTable& h0) {
    if (h1.outcomes != h0.outcomes)
        throw DomainError("hypothesis tables have different outcome sets");
    auto idx = align(counts, h1);
    Vector weights(h1.size(), 0.0);
    for (std::size_t k = 0; k < idx.size(); ++k)
        weights[idx[k]] += static_cast<double>(counts.counts[k]);
    return log_evidence(weights, h1, h0);
}

double FisherReport::min_eigenvalue() const {
    if (matrix.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(matrix, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double FisherReport::quadratic_form(std::span<const double> epsilon) const {
    if (static_cast<Eigen::Index>(epsilon.size()) != matrix.rows())
        throw DomainError("displacement dimension does not match Fisher matrix");
    Eigen::Map<const Eigen::VectorXd> e(epsilon.data(), static_cast<Eigen::Index>(epsilon.size()));
    return e.dot(matrix * e);
}

FisherReport fisher_discrete(const OutcomeTable& family, std::span<const double> theta,
                             const FisherOptions& options) {
    if (theta.empty()) throw DomainError("parameter vector must have dimension >= 1");
    const Vector p = evaluate(family, theta);
    const Eigen::MatrixXd jac = jacobian(family, theta, options.theta_step);

    FisherReport report;
    report.parameter.assign(theta.begin(), theta.end());
    const auto d = static_cast<Eigen::Index>(theta.size());
    report.matrix = Eigen::MatrixXd::Zero(d, d);
    std::size_t used = 0;
    for (std::size_t o = 0; o < p.size(); ++o) {
        if (p[o] < options.floor) {
            report.excluded_outcomes.push_back(family.outcomes[o]);
            continue;
        }
        const Eigen::VectorXd g = jac.row(static_cast<Eigen::Index>(o)).transpose();
        report.matrix.noalias() += (g * g.transpose()) / p[o];
        ++used;
    }
    if (used == 0) throw DomainError("all outcomes fall below the positivity floor");
    return report;
}

EvidenceReport evidence_quadratic(const OutcomeTable& family, std::span<const double> theta,
                                  std::span<const double> epsilon, double trials,
                                  const FisherOptions& options) {
    if (epsilon.size() != theta.size())
        throw DomainError("displacement and parameter dimensions differ");
    const OutcomeTable base = family.at(theta);
    Vector moved(theta.begin(), theta.end());
    for (std::size_t i = 0; i < moved.size(); ++i) moved[i] += epsilon[i];
    const OutcomeTable displaced = family.at(moved);
    for (std::size_t o = 0; o < base.size(); ++o)
        if (base.prob[o] < options.floor || displaced.prob[o] < options.floor)
            throw DomainError("outcome '" + base.outcomes[o] +
                              "' below the positivity floor at theta or theta + epsilon");

    Vector weights(base.size());
    for (std::size_t o = 0; o < base.size(); ++o) weights[o] = trials * base.prob[o];

    EvidenceReport report;
    report.epsilon.assign(epsilon.begin(), epsilon.end());
    report.log_evidence = log_evidence(weights, displaced, base);
    const FisherReport fisher = fisher_discrete(family, theta, options);
    report.quadratic_prediction = -0.5 * trials * fisher.quadratic_form(epsilon);

    const double norm = std::sqrt(std::inner_product(epsilon.begin(), epsilon.end(),
                                                     epsilon.begin(), 0.0));
    if (norm > 0.0) {
        // g(s) = sum_o p_o ln p_o(theta + s e); third derivative by a
        // five-point stencil.
        const double s = 1e-3;
        auto g = [&](double t) {
            Vector at(theta.begin(), theta.end());
            for (std::size_t i = 0; i < at.size(); ++i) at[i] += t * epsilon[i] / norm;
            const Vector q = evaluate(family, at);
            double acc = 0.0;
            for (std::size_t o = 0; o < q.size(); ++o) acc += base.prob[o] * std::log(q[o]);
            return acc;
        };
        const double third =
            (g(2 * s) - 2 * g(s) + 2 * g(-s) - g(-2 * s)) / (2 * s * s * s);
        report.cubic_remainder_bound = trials / 6.0 * std::abs(third) * norm * norm * norm;
    }
    return report;
}

EvidenceBound evidence_bound_check(const OutcomeTable& family, std::span<const double> theta,
                                   std::span<const double> epsilon,
                                   const FisherOptions& options) {
    if (epsilon.size() != theta.size())
        throw DomainError("displacement and parameter dimensions differ");
    const FisherReport fisher = fisher_discrete(family, theta, options);
    const double trace = fisher.matrix.trace();
    double sq = 0.0, max_sq = 0.0;
    for (double e : epsilon) {
        sq += e * e;
        max_sq = std::max(max_sq, e * e);
    }
    EvidenceBound b;
    b.middle = fisher.quadratic_form(epsilon);
    b.cauchy_schwarz = sq * trace;
    b.upper = static_cast<double>(epsilon.size()) * max_sq * trace;
    // relative slack for the rounding in the quadratic form
    const double slack = 1e-12 * std::max(1.0, b.upper);
    b.pass = b.lower <= b.middle + slack && b.middle <= b.cauchy_schwarz + slack &&
             b.cauchy_schwarz <= b.upper + slack;
    return b;
}

std::uint64_t composition_count(std::uint32_t n, std::uint32_t m) {
    if (m == 0) return n == 0 ? 1 : 0;
    // C(n + m - 1, m - 1), saturating
    const std::uint64_t k = m - 1;
    const std::uint64_t top = static_cast<std::uint64_t>(n) + k;
    unsigned __int128 c = 1;
    for (std::uint64_t j = 1; j <= k; ++j) {
        c = c * (top - k + j) / j;
        if (c > std::numeric_limits<std::uint64_t>::max())
            return std::numeric_limits<std::uint64_t>::max();
    }
    return static_cast<std::uint64_t>(c);
}

MaximizerBounds frequency_assignment(std::span<const std::uint32_t> counts,
                                     std::span<const double> probs) {
    const std::size_t m = counts.size();
    if (m < 2) throw DomainError("need at least two outcomes");
    if (!probs.empty() && probs.size() != m)
        throw DomainError("probabilities and counts differ in size");
    const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
    if (n < 1) throw DomainError("need at least one trial");

    MaximizerBounds b;
    b.counts.assign(counts.begin(), counts.end());
    b.holds = true;
    for (std::size_t j = 0; j < m; ++j) {
        const double nj = counts[j];
        b.lower.push_back(nj / (n + static_cast<double>(m) - 1.0));
        b.upper.push_back((nj + 1.0) / (n + 1.0));
        b.assigned.push_back(nj / (n + 1.0));
        b.frequency.push_back(nj / n);
        if (!probs.empty()) {
            const double tol = 1e-12;
            if (probs[j] < b.lower[j] - tol || probs[j] > b.upper[j] + tol) b.holds = false;
        }
    }
    return b;
}

AppendixAReport appendix_a_suite(std::span<const double> probs, std::uint32_t trials,
                                 std::uint64_t cap) {
    const auto m = static_cast<std::uint32_t>(probs.size());
    if (m < 2) throw DomainError("frequency-bound suite needs m >= 2 outcomes");
    if (trials < 1) throw DomainError("frequency-bound suite needs N >= 1");
    for (double p : probs)
        if (!(p > 0.0)) throw DomainError("frequency-bound suite needs strictly positive probabilities");

    AppendixAReport report;
    report.trials = trials;
    report.compositions = composition_count(trials, m);
    if (report.compositions > cap)
        throw ResourceError(std::to_string(report.compositions) +
                            " compositions exceed the cap of " + std::to_string(cap));

    Vector logp(m);
    for (std::uint32_t j = 0; j < m; ++j) logp[j] = std::log(probs[j]);
    const double log_n_fact = log_factorial(trials);

    // Enumerate compositions in lexicographic order with the last part as
    // the remainder.
    Composition c(m, 0);
    c[m - 1] = trials;
    std::vector<Composition> best;
    double best_value = -std::numeric_limits<double>::infinity();
    const double tie_tol = 1e-12;
    while (true) {
        double v = log_n_fact;
        for (std::uint32_t j = 0; j < m; ++j) v += c[j] * logp[j] - log_factorial(c[j]);
        const double scale = best.empty() ? 1.0 : std::max(1.0, std::abs(best_value));
        if (best.empty() || v > best_value + tie_tol * scale) {
            best_value = v;
            best.assign(1, c);
        } else if (std::abs(v - best_value) <= tie_tol * scale) {
            best.push_back(c);
        }
        // advance: find the rightmost non-last index that can grow
        std::int64_t j = static_cast<std::int64_t>(m) - 2;
        while (j >= 0 && c[m - 1] == 0) {
            // move everything back from position j into the remainder
            c[m - 1] += c[static_cast<std::size_t>(j)];
            c[static_cast<std::size_t>(j)] = 0;
            --j;
        }
        if (j < 0) break;
        ++c[static_cast<std::size_t>(j)];
        --c[m - 1];
    }
    // A late strict improvement may leave stale near-ties; filter again.
    std::erase_if(best, [&](const Composition& cc) {
        double v = log_n_fact;
        for (std::uint32_t j = 0; j < m; ++j) v += cc[j] * logp[j] - log_factorial(cc[j]);
        return v < best_value - tie_tol * std::max(1.0, std::abs(best_value));
    });

    report.max_log_iprob = best_value;
    report.all_bounds_hold = true;
    for (const auto& cc : best) {
        report.maximizers.push_back(frequency_assignment(cc, probs));
        report.all_bounds_hold = report.all_bounds_hold && report.maximizers.back().holds;
    }
    return report;
}

} // namespace robustqm::inference
