#pragma once

#include <cstdint>

#include "robustqm/eprb.hpp"
#include "robustqm/inference.hpp"

namespace robustqm::stern_gerlach {

using eprb::Vec3;

/// Magnet direction a, moment direction S, and the sign fixing which
/// deflection is labelled +1.
struct MagnetSetting {
    Vec3 a{0.0, 0.0, 1.0};
    Vec3 S{0.0, 0.0, 1.0};
    int branch_sign = 1;

    /// a = z, S in the x-z plane at angle theta from z.
    static MagnetSetting at_angle(double theta, int branch_sign = 1);

    bool is_valid() const noexcept;
    double cos_theta() const noexcept;
};

inline const std::vector<std::string>& deflection_outcomes() {
    static const std::vector<std::string> labels{"+1", "-1"};
    return labels;
}

/// P(x) = (1 + branch x a.S) / 2 over outcomes {+1, -1}.
inference::OutcomeTable sg_table(const MagnetSetting& setting);

/// theta -> sg_table(at_angle(theta, branch_sign)).
inference::OutcomeTable sg_family(int branch_sign, double theta);

/// N draws from sg_table; trial i uses counter-based stream (seed, i).
inference::CountRecord simulate_sg(const MagnetSetting& setting, std::uint64_t trials,
                                   std::uint64_t seed);

} // namespace robustqm::stern_gerlach
