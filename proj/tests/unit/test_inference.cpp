#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "robustqm/errors.hpp"
#include "robustqm/inference.hpp"
#include "robustqm/rng.hpp"

using namespace robustqm;
using namespace robustqm::inference;

namespace {

constexpr double pi = std::numbers::pi;

CountRecord counts(std::vector<std::uint64_t> n) {
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < n.size(); ++i) labels.push_back("o" + std::to_string(i));
    return {labels, std::move(n)};
}

OutcomeTable table(Vector p) {
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < p.size(); ++i) labels.push_back("o" + std::to_string(i));
    return OutcomeTable::fixed(labels, std::move(p));
}

OutcomeTable cos_family(double k, double theta) {
    return OutcomeTable::family(
        {"+", "-"},
        [k](std::span<const double> t) {
            const double e = std::cos(k * t[0]);
            return Vector{(1.0 + e) / 2.0, (1.0 - e) / 2.0};
        },
        {theta});
}

// every sequence of length N over m symbols, tallied into its occupation numbers
double brute_force_iprob(const std::vector<std::uint64_t>& n, const Vector& p) {
    std::size_t total = 0;
    for (auto v : n) total += v;
    std::size_t sequences = 1;
    for (std::size_t i = 0; i < total; ++i) sequences *= p.size();
    double acc = 0.0;
    for (std::size_t s = 0; s < sequences; ++s) {
        std::vector<std::uint64_t> tally(p.size(), 0);
        double prob = 1.0;
        std::size_t code = s;
        for (std::size_t i = 0; i < total; ++i) {
            tally[code % p.size()]++;
            prob *= p[code % p.size()];
            code /= p.size();
        }
        if (tally == n) acc += prob;
    }
    return acc;
}

} // namespace

TEST(ValidateTable, AcceptsUniformAndBoundaryTables) {
    EXPECT_TRUE(validate_table(table({0.25, 0.25, 0.25, 0.25})).empty());
    EXPECT_TRUE(validate_table(table({1.0, 0.0})).empty());
}

TEST(ValidateTable, ReportsNormalizationViolation) {
    const auto v = validate_table(table({0.5, 0.6}));
    ASSERT_FALSE(v.empty());
    EXPECT_TRUE(std::any_of(v.begin(), v.end(),
                            [](const Violation& x) { return x.kind == ViolationKind::normalization; }));
}

TEST(ValidateTable, ReportsNegativeEntry) {
    const auto v = validate_table(table({1.2, -0.2}));
    EXPECT_TRUE(std::any_of(v.begin(), v.end(), [](const Violation& x) {
        return x.kind == ViolationKind::negative_probability;
    }));
}

TEST(Multinomial, DirectExamples) {
    EXPECT_NEAR(multinomial_iprob(counts({2, 1}), table({0.5, 0.5})), 0.375, 1e-15);
    EXPECT_NEAR(multinomial_iprob(counts({7, 0, 0}), table({1.0, 0.0, 0.0})), 1.0, 1e-15);
}

TEST(Multinomial, AgreesWithSequenceEnumeration) {
    const Vector p{0.25, 0.25, 0.25, 0.25};
    const double oracle = brute_force_iprob({1, 1, 1, 1}, p);
    EXPECT_NEAR(oracle, 0.09375, 1e-15);
    EXPECT_NEAR(multinomial_iprob(counts({1, 1, 1, 1}), table(p)), oracle, 1e-15);
    const Vector q{0.2, 0.5, 0.3};
    EXPECT_NEAR(multinomial_iprob(counts({2, 3, 1}), table(q)), brute_force_iprob({2, 3, 1}, q), 1e-14);
}

TEST(Multinomial, LogSpaceBranchAgreesWithDirect) {
    const auto t = table({0.3, 0.7});
    // N = 100 is evaluated directly, N = 101 through log-gamma
    const double a = multinomial_iprob(counts({30, 70}), t);
    const double b = multinomial_iprob(counts({30, 71}), t);
    EXPECT_NEAR(b / a, 101.0 / 71.0 * 0.7, 1e-11);
}

TEST(Multinomial, ZeroProbabilityObservedOutcome) {
    EXPECT_THROW(multinomial_iprob(counts({1, 1}), table({1.0, 0.0})), DomainError);
    EXPECT_EQ(log_multinomial_iprob(counts({1, 1}), table({1.0, 0.0})),
              -std::numeric_limits<double>::infinity());
}

TEST(Evidence, ExamplesAndAntisymmetry) {
    const auto c = counts({3, 1});
    const auto h1 = table({0.75, 0.25}), h0 = table({0.5, 0.5});
    EXPECT_DOUBLE_EQ(log_evidence(c, h1, h1), 0.0);
    const double ev = log_evidence(c, h1, h0);
    EXPECT_NEAR(ev, 3.0 * std::log(1.5) + std::log(0.5), 1e-15);
    EXPECT_NEAR(ev, 0.52325, 5e-6);
    EXPECT_NEAR(ev, std::log(multinomial_iprob(c, h1) / multinomial_iprob(c, h0)), 1e-13);
    EXPECT_EQ(log_evidence(c, h0, h1), -ev);
}

TEST(Fisher, BernoulliCosineFamilyIsOne) {
    for (double theta : {0.3, 1.0, 1.7, 2.9}) {
        const double th[1] = {theta};
        EXPECT_NEAR(fisher_discrete(cos_family(1.0, theta), th).matrix(0, 0), 1.0, 1e-6);
    }
}

TEST(Fisher, DoubledFrequencyGivesFour) {
    const double th[1] = {0.4};
    EXPECT_NEAR(fisher_discrete(cos_family(2.0, 0.4), th).matrix(0, 0), 4.0, 1e-6);
}

TEST(Fisher, ConstantFamilyIsZero) {
    const auto f = OutcomeTable::family({"a", "b"}, [](std::span<const double>) { return Vector{0.4, 0.6}; },
                                        {0.0, 0.0});
    const double th[2] = {0.2, -0.3};
    EXPECT_NEAR(fisher_discrete(f, th).matrix.norm(), 0.0, 1e-15);
}

TEST(Fisher, ReportsExcludedOutcomes) {
    const double th[1] = {0.0};
    const auto r = fisher_discrete(cos_family(1.0, 0.0), th);
    ASSERT_EQ(r.excluded_outcomes.size(), 1u);
    EXPECT_EQ(r.excluded_outcomes.front(), "-");
}

TEST(Fisher, PositiveSemidefiniteOnRandomFamilies) {
    for (std::uint64_t s = 0; s < 1000; ++s) {
        CounterRng r(123, s);
        const double a = r.uniform() * 3.0, b = r.uniform() * 3.0, c = r.uniform();
        const auto fam = OutcomeTable::family(
            {"0", "1", "2"},
            [=](std::span<const double> t) {
                Vector w{std::exp(a * std::sin(t[0])), std::exp(b * std::cos(t[1])),
                         std::exp(c * t[0] * t[1])};
                const double z = w[0] + w[1] + w[2];
                for (auto& x : w) x /= z;
                return w;
            },
            {0.0, 0.0});
        const double th[2] = {r.uniform() * 2.0 - 1.0, r.uniform() * 2.0 - 1.0};
        ASSERT_GE(fisher_discrete(fam, th).min_eigenvalue(), -1e-10);
    }
}

TEST(EvidenceQuadratic, ZeroDisplacement) {
    const double th[1] = {1.0}, e[1] = {0.0};
    const auto r = evidence_quadratic(cos_family(1.0, 1.0), th, e, 1e6);
    EXPECT_EQ(r.log_evidence, 0.0);
    EXPECT_EQ(r.quadratic_prediction, 0.0);
}

TEST(EvidenceQuadratic, RatioToPredictionApproachesOne) {
    const double th[1] = {pi / 2};
    double prev = 1e9;
    for (double eps : {1e-2, 5e-3, 2.5e-3}) {
        const double e[1] = {eps};
        const auto r = evidence_quadratic(cos_family(1.0, pi / 2), th, e, 1e6);
        const double gap = std::abs(r.log_evidence / r.quadratic_prediction - 1.0);
        EXPECT_LT(gap, 1e-2);
        EXPECT_LT(gap, prev);
        prev = gap;
    }
}

TEST(EvidenceQuadratic, CubicRemainderAtGenericAngle) {
    // away from symmetric points the remainder is genuinely cubic
    const double theta = pi / 3;
    const double th[1] = {theta};
    double rem[3];
    const double eps[3] = {1e-2, 5e-3, 2.5e-3};
    for (int k = 0; k < 3; ++k) {
        const double e[1] = {eps[k]};
        const auto r = evidence_quadratic(cos_family(1.0, theta), th, e, 1e6);
        rem[k] = std::abs(r.log_evidence - r.quadratic_prediction);
        EXPECT_LT(rem[k], 2.0 * r.cubic_remainder_bound + 1e-9);
    }
    EXPECT_GE(rem[0] / rem[1], 6.0);
    EXPECT_LE(rem[0] / rem[1], 10.0);
    EXPECT_GE(rem[1] / rem[2], 6.0);
    EXPECT_LE(rem[1] / rem[2], 10.0);
}

TEST(EvidenceQuadratic, SymmetricAverageRemovesOddOrder) {
    const double theta = 1.1;
    const double th[1] = {theta};
    for (double eps : {1e-2, 5e-3}) {
        const double ep[1] = {eps}, en[1] = {-eps};
        const auto a = evidence_quadratic(cos_family(1.0, theta), th, ep, 1e6);
        const auto b = evidence_quadratic(cos_family(1.0, theta), th, en, 1e6);
        const double avg = 0.5 * (a.log_evidence + b.log_evidence);
        EXPECT_LT(std::abs(avg - a.quadratic_prediction), 1e6 * std::pow(eps, 3));
    }
}

TEST(EvidenceBound, OrderingOnProductFamilies) {
    for (std::uint64_t s = 0; s < 1000; ++s) {
        CounterRng r(55, s);
        const double k1 = 0.5 + r.uniform(), k2 = 0.5 + r.uniform();
        const auto fam = OutcomeTable::family(
            {"++", "+-", "-+", "--"},
            [=](std::span<const double> t) {
                const double p = 0.5 + 0.4 * std::sin(k1 * t[0]);
                const double q = 0.5 + 0.4 * std::cos(k2 * t[1]);
                return Vector{p * q, p * (1 - q), (1 - p) * q, (1 - p) * (1 - q)};
            },
            {0.0, 0.0});
        const double th[2] = {r.uniform() * 3.0, r.uniform() * 3.0};
        const double e[2] = {0.1 * (r.uniform() - 0.5), 0.1 * (r.uniform() - 0.5)};
        const auto b = evidence_bound_check(fam, th, e);
        ASSERT_TRUE(b.pass);
        ASSERT_LE(b.lower, b.middle);
        ASSERT_LE(b.middle, b.cauchy_schwarz * (1 + 1e-12));
        ASSERT_LE(b.cauchy_schwarz, b.upper * (1 + 1e-12));
    }
}

TEST(EvidenceBound, OneParameterIsTight) {
    const double th[1] = {0.8}, e[1] = {0.03};
    const auto b = evidence_bound_check(cos_family(1.0, 0.8), th, e);
    EXPECT_NEAR(b.upper, b.middle, 1e-15);
    const double z[1] = {0.0};
    const auto zero = evidence_bound_check(cos_family(1.0, 0.8), th, z);
    EXPECT_TRUE(zero.pass);
    EXPECT_EQ(zero.middle, 0.0);
    EXPECT_EQ(zero.upper, 0.0);
}

TEST(FrequencyBounds, CompositionCount) {
    EXPECT_EQ(composition_count(3, 2), 4u);
    EXPECT_EQ(composition_count(6, 3), 28u);
    EXPECT_EQ(composition_count(0, 5), 1u);
}

TEST(FrequencyBounds, FairCoinThreeTrials) {
    const Vector p{0.5, 0.5};
    const auto r = appendix_a_suite(p, 3);
    EXPECT_EQ(r.compositions, 4u);
    ASSERT_EQ(r.maximizers.size(), 2u);
    std::vector<Composition> found;
    for (const auto& m : r.maximizers) {
        found.push_back(m.counts);
        EXPECT_TRUE(m.holds);
    }
    std::sort(found.begin(), found.end());
    EXPECT_EQ(found[0], (Composition{1, 2}));
    EXPECT_EQ(found[1], (Composition{2, 1}));
}

TEST(FrequencyBounds, ThreeOutcomeSixTrials) {
    const Vector p{0.5, 1.0 / 3.0, 1.0 / 6.0};
    const auto r = appendix_a_suite(p, 6);
    EXPECT_EQ(r.compositions, 28u);
    ASSERT_EQ(r.maximizers.size(), 1u);
    EXPECT_EQ(r.maximizers[0].counts, (Composition{3, 2, 1}));
    EXPECT_TRUE(r.all_bounds_hold);
}

TEST(FrequencyBounds, FrequencyAssignmentKeepsBothValues) {
    const std::uint32_t n[2] = {3, 1};
    const auto a = frequency_assignment(n);
    EXPECT_NEAR(a.assigned[0], 0.6, 1e-15);
    EXPECT_NEAR(a.assigned[1], 0.2, 1e-15);
    EXPECT_NEAR(a.frequency[0], 0.75, 1e-15);
    EXPECT_NEAR(a.frequency[1], 0.25, 1e-15);
}

TEST(FrequencyBounds, RandomTablesNeverViolate) {
    for (std::uint32_t m : {2u, 3u})
        for (std::uint64_t t = 0; t < 100; ++t) {
            CounterRng r(8, t);
            Vector p(m);
            double z = 0.0;
            for (auto& x : p) z += (x = 0.01 + r.uniform());
            for (auto& x : p) x /= z;
            for (std::uint32_t n = 1; n <= 12; ++n) ASSERT_TRUE(appendix_a_suite(p, n).all_bounds_hold);
        }
}

TEST(FrequencyBounds, CapRaisesResourceError) {
    const Vector p(8, 0.125);
    EXPECT_THROW(appendix_a_suite(p, 40, 1000), ResourceError);
}
