#include "robustqm/stern_gerlach.hpp"

#include <algorithm>
#include <cmath>

#include "robustqm/errors.hpp"
#include "robustqm/parallel.hpp"
#include "robustqm/rng.hpp"

namespace robustqm::stern_gerlach {

using inference::OutcomeTable;

MagnetSetting MagnetSetting::at_angle(double theta, int branch_sign) {
    return {{0.0, 0.0, 1.0}, {std::sin(theta), 0.0, std::cos(theta)}, branch_sign};
}

bool MagnetSetting::is_valid() const noexcept {
    return std::abs(eprb::norm(a) - 1.0) <= 1e-12 && std::abs(eprb::norm(S) - 1.0) <= 1e-12 &&
           (branch_sign == 1 || branch_sign == -1);
}

double MagnetSetting::cos_theta() const noexcept {
    return std::clamp(eprb::dot(a, S), -1.0, 1.0);
}

namespace {

std::vector<double> probabilities(double expectation) {
    // E(theta) = branch cos(theta)
    return {(1.0 + expectation) / 2.0, (1.0 - expectation) / 2.0};
}

} // namespace

OutcomeTable sg_table(const MagnetSetting& setting) {
    if (!setting.is_valid())
        throw DomainError("magnet setting needs unit vectors and a branch sign of +1 or -1");
    auto t = OutcomeTable::fixed(deflection_outcomes(),
                                 probabilities(setting.branch_sign * setting.cos_theta()), "sg");
    t.parameter = {std::acos(setting.cos_theta())};
    return t;
}

OutcomeTable sg_family(int branch_sign, double theta) {
    if (branch_sign != 1 && branch_sign != -1) throw DomainError("branch sign must be +1 or -1");
    return OutcomeTable::family(
        deflection_outcomes(),
        [branch_sign](std::span<const double> th) {
            return probabilities(branch_sign * std::cos(th[0]));
        },
        {theta}, "sg");
}

inference::CountRecord simulate_sg(const MagnetSetting& setting, std::uint64_t trials,
                                   std::uint64_t seed) {
    if (trials < 1) throw DomainError("need at least one trial");
    const double p_plus = sg_table(setting).prob[0];
    const std::size_t workers = worker_count();
    std::vector<std::uint64_t> plus(std::max<std::size_t>(workers, 1), 0);
    parallel_chunks(
        trials,
        [&](std::size_t w, std::size_t begin, std::size_t end) {
            std::uint64_t local = 0;
            for (std::size_t i = begin; i < end; ++i) {
                CounterRng rng(seed, i);
                local += rng.uniform() < p_plus;
            }
            plus[w] = local;
        },
        workers);
    std::uint64_t n_plus = 0;
    for (auto v : plus) n_plus += v;
    return {deflection_outcomes(), {n_plus, trials - n_plus}};
}

} // namespace robustqm::stern_gerlach
